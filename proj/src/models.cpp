#include "polyscale/models.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "polyscale/error.hpp"

namespace polyscale {

namespace detail {

double sigmoid(double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    double e = std::exp(x);
    return e / (1.0 + e);
}

double log_sigmoid(double x) {
    if (x >= 0) return -std::log1p(std::exp(-x));
    return x - std::log1p(std::exp(x));
}

double log_sum_exp(std::span<const double> xs) {
    double mx = -std::numeric_limits<double>::infinity();
    for (double x : xs) mx = std::max(mx, x);
    if (!std::isfinite(mx)) return mx;
    double s = 0;
    for (double x : xs) s += std::exp(x - mx);
    return mx + std::log(s);
}

}  // namespace detail

using detail::log_sigmoid;
using detail::sigmoid;

std::string_view to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::grm: return "grm";
        case ModelKind::ggum: return "ggum";
        case ModelKind::nrm: return "nrm";
    }
    return "?";
}

ModelKind parse_model_kind(std::string_view name) {
    std::string s(name);
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    if (s == "grm") return ModelKind::grm;
    if (s == "ggum") return ModelKind::ggum;
    if (s == "nrm") return ModelKind::nrm;
    throw ConfigError("unknown model '" + std::string(name) + "' (expected grm, ggum or nrm)");
}

void GrmItemParams::validate() const {
    if (!(a > 0) || !std::isfinite(a)) throw ParameterError("GRM discrimination must be positive and finite");
    if (d.empty()) throw ParameterError("GRM item needs at least two categories");
    for (std::size_t j = 0; j < d.size(); ++j) {
        if (!std::isfinite(d[j])) throw ParameterError("GRM boundary locations must be finite");
        if (j > 0 && !(d[j] > d[j - 1])) throw ParameterError("GRM boundary locations must be strictly increasing");
    }
}

void GgumItemParams::validate() const {
    if (!(a > 0) || !std::isfinite(a)) throw ParameterError("GGUM discrimination must be positive and finite");
    if (!std::isfinite(d)) throw ParameterError("GGUM location must be finite");
    if (tau.empty()) throw ParameterError("GGUM item needs at least two categories");
    for (double t : tau)
        if (!std::isfinite(t)) throw ParameterError("GGUM thresholds must be finite");
}

NrmItemParams NrmItemParams::from_locations(std::span<const double> slopes, std::span<const double> locations) {
    if (slopes.size() != locations.size()) throw ParameterError("NRM slopes and locations differ in length");
    NrmItemParams p;
    p.a.assign(slopes.begin(), slopes.end());
    for (std::size_t k = 0; k < slopes.size(); ++k) p.c.push_back(-slopes[k] * locations[k]);
    return p;
}

double NrmItemParams::location(std::size_t k) const { return -c.at(k) / a.at(k); }

bool NrmItemParams::identified(double tol) const {
    double sa = 0, sc = 0, scale = 1;
    for (std::size_t k = 0; k < a.size(); ++k) {
        sa += a[k];
        sc += c[k];
        scale = std::max({scale, std::abs(a[k]), std::abs(c[k])});
    }
    return std::abs(sa) <= tol * scale * a.size() && std::abs(sc) <= tol * scale * a.size();
}

NrmItemParams NrmItemParams::centered() const {
    NrmItemParams p = *this;
    double ma = 0, mc = 0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        ma += a[k];
        mc += c[k];
    }
    ma /= static_cast<double>(a.size());
    mc /= static_cast<double>(a.size());
    for (std::size_t k = 0; k < a.size(); ++k) {
        p.a[k] -= ma;
        p.c[k] -= mc;
    }
    return p;
}

void NrmItemParams::validate() const {
    if (a.size() < 2) throw ParameterError("NRM item needs at least two categories");
    if (c.size() != a.size()) throw ParameterError("NRM slopes and intercepts differ in length");
    for (std::size_t k = 0; k < a.size(); ++k)
        if (!std::isfinite(a[k]) || !std::isfinite(c[k])) throw ParameterError("NRM parameters must be finite");
}

ModelKind model_of(const ItemParams& p) {
    return static_cast<ModelKind>(p.index());
}

std::size_t category_count(const ItemParams& p) {
    return std::visit([](const auto& q) { return q.categories(); }, p);
}

void validate(const ItemParams& p) {
    std::visit([](const auto& q) { q.validate(); }, p);
}

std::size_t natural_param_count(const ItemParams& p) {
    struct {
        std::size_t operator()(const GrmItemParams& q) const { return 1 + q.d.size(); }
        std::size_t operator()(const GgumItemParams& q) const { return 2 + q.tau.size(); }
        std::size_t operator()(const NrmItemParams& q) const { return 2 * q.a.size(); }
    } v;
    return std::visit(v, p);
}

double grm_cumulative(const GrmItemParams& p, double theta, std::size_t x) {
    const std::size_t m = p.categories();
    if (x < 1 || x > m + 1) throw std::out_of_range("GRM boundary index out of range");
    if (x == 1) return 1.0;
    if (x == m + 1) return 0.0;
    return sigmoid(p.a * (theta - p.d[x - 2]));
}

namespace {

// GRM category k is bounded above by boundary k-1 (u) and below by boundary k (v):
// log P = log s(u) + log s(-v) + log(1 - e^{v-u}).
void grm_eval(const GrmItemParams& p, double theta, std::span<double> logp, std::span<double> jac) {
    const std::size_t m = p.categories();
    const std::size_t np = 1 + p.d.size();
    const bool want_jac = !jac.empty();
    if (want_jac) std::fill(jac.begin(), jac.end(), 0.0);
    for (std::size_t k = 0; k < m; ++k) {
        const bool has_upper = k > 0;      // boundary k-1 exists
        const bool has_lower = k + 1 < m;  // boundary k exists
        double u = has_upper ? p.a * (theta - p.d[k - 1]) : 0;
        double v = has_lower ? p.a * (theta - p.d[k]) : 0;
        double lp = 0, du = 0, dv = 0;
        if (has_upper && has_lower) {
            double gap = u - v;
            lp = log_sigmoid(u) + log_sigmoid(-v) + std::log(-std::expm1(-gap));
            double rho = 1.0 / std::expm1(gap);
            du = sigmoid(-u) + rho;
            dv = -sigmoid(v) - rho;
        } else if (has_upper) {
            lp = log_sigmoid(u);
            du = sigmoid(-u);
        } else {
            lp = log_sigmoid(-v);
            dv = -sigmoid(v);
        }
        logp[k] = lp;
        if (!want_jac) continue;
        double* row = jac.data() + k * np;
        if (has_upper) {
            row[0] += du * (theta - p.d[k - 1]);
            row[1 + (k - 1)] += -p.a * du;
        }
        if (has_lower) {
            row[0] += dv * (theta - p.d[k]);
            row[1 + k] += -p.a * dv;
        }
    }
}

double grm_dtheta(const GrmItemParams& p, double theta, std::size_t k) {
    const std::size_t m = p.categories();
    double su = k > 0 ? sigmoid(-p.a * (theta - p.d[k - 1])) : 0.0;
    double sv = k + 1 < m ? sigmoid(p.a * (theta - p.d[k])) : 0.0;
    return p.a * (su - sv);
}

// Subjective response w in 0..M has log-weight a [w |theta - d| - T_w] with
// T_w = tau_1 + ... + tau_min(w, M-w). Evaluating at |theta - d| makes the
// unfolding symmetry exact.
struct GgumTerms {
    std::vector<double> g;
    std::vector<double> cum_tau;  // cum_tau[j] = tau_1 + ... + tau_j
    double u = 0;
    double sign = 1;
    std::size_t C = 0, M = 0;
};

GgumTerms ggum_terms(const GgumItemParams& p, double theta) {
    GgumTerms t;
    t.C = p.tau.size();
    t.M = 2 * t.C + 1;
    double diff = theta - p.d;
    t.sign = diff < 0 ? -1.0 : 1.0;
    t.u = std::abs(diff);
    t.cum_tau.assign(t.C + 1, 0.0);
    for (std::size_t j = 1; j <= t.C; ++j) t.cum_tau[j] = t.cum_tau[j - 1] + p.tau[j - 1];
    t.g.resize(t.M + 1);
    for (std::size_t w = 0; w <= t.M; ++w) {
        t.g[w] = p.a * (static_cast<double>(w) * t.u - t.cum_tau[std::min(w, t.M - w)]);
    }
    return t;
}

void ggum_eval(const GgumItemParams& p, double theta, std::span<double> logp, std::span<double> jac) {
    auto t = ggum_terms(p, theta);
    const double lz = detail::log_sum_exp(t.g);
    const std::size_t np = 2 + t.C;
    for (std::size_t z = 0; z <= t.C; ++z) {
        double pair[2] = {t.g[z], t.g[t.M - z]};
        logp[z] = detail::log_sum_exp(pair) - lz;
    }
    if (jac.empty()) return;
    std::fill(jac.begin(), jac.end(), 0.0);
    // Gradient of g(w): da = w u - T_w, dd = -a w sign, dtau_j = -a [j <= min(w, M-w)].
    auto add_term = [&](double* row, std::size_t w, double weight) {
        const double wd = static_cast<double>(w);
        const std::size_t depth = std::min(w, t.M - w);
        row[0] += weight * (wd * t.u - t.cum_tau[depth]);
        row[1] += weight * (-p.a * wd * t.sign);
        for (std::size_t j = 1; j <= depth; ++j) row[1 + j] += weight * (-p.a);
    };
    std::vector<double> all(np, 0.0);
    for (std::size_t w = 0; w <= t.M; ++w) add_term(all.data(), w, std::exp(t.g[w] - lz));
    for (std::size_t z = 0; z <= t.C; ++z) {
        double* row = jac.data() + z * np;
        double pair[2] = {t.g[z], t.g[t.M - z]};
        double ln = detail::log_sum_exp(pair);
        add_term(row, z, std::exp(t.g[z] - ln));
        add_term(row, t.M - z, std::exp(t.g[t.M - z] - ln));
        for (std::size_t j = 0; j < np; ++j) row[j] -= all[j];
    }
}

double ggum_dtheta(const GgumItemParams& p, double theta, std::size_t z) {
    auto t = ggum_terms(p, theta);
    const double lz = detail::log_sum_exp(t.g);
    double mean_all = 0;
    for (std::size_t w = 0; w <= t.M; ++w) mean_all += static_cast<double>(w) * std::exp(t.g[w] - lz);
    double pair[2] = {t.g[z], t.g[t.M - z]};
    double ln = detail::log_sum_exp(pair);
    double mean_num = static_cast<double>(z) * std::exp(t.g[z] - ln) +
                      static_cast<double>(t.M - z) * std::exp(t.g[t.M - z] - ln);
    return p.a * t.sign * (mean_num - mean_all);
}

void nrm_eval(const NrmItemParams& p, double theta, std::span<double> logp, std::span<double> jac) {
    const std::size_t m = p.categories();
    for (std::size_t k = 0; k < m; ++k) logp[k] = p.a[k] * theta + p.c[k];
    const double lz = detail::log_sum_exp(logp);
    for (std::size_t k = 0; k < m; ++k) logp[k] -= lz;
    if (jac.empty()) return;
    const std::size_t np = 2 * m;
    for (std::size_t k = 0; k < m; ++k) {
        double* row = jac.data() + k * np;
        for (std::size_t h = 0; h < m; ++h) {
            double ind = (h == k ? 1.0 : 0.0) - std::exp(logp[h]);
            row[h] = theta * ind;
            row[m + h] = ind;
        }
    }
}

double nrm_dtheta(const NrmItemParams& p, double theta, std::size_t k) {
    const std::size_t m = p.categories();
    std::vector<double> lg(m);
    for (std::size_t h = 0; h < m; ++h) lg[h] = p.a[h] * theta + p.c[h];
    const double lz = detail::log_sum_exp(lg);
    double mean = 0;
    for (std::size_t h = 0; h < m; ++h) mean += std::exp(lg[h] - lz) * p.a[h];
    return p.a[k] - mean;
}

CategoryDistribution exp_all(const std::vector<double>& lp) {
    CategoryDistribution out(lp.size());
    for (std::size_t k = 0; k < lp.size(); ++k) out[k] = std::exp(lp[k]);
    return out;
}

}  // namespace

CategoryDistribution grm_category_probs(const GrmItemParams& p, double theta) {
    std::vector<double> lp(p.categories());
    grm_eval(p, theta, lp, {});
    return exp_all(lp);
}

CategoryDistribution ggum_category_probs(const GgumItemParams& p, double theta) {
    std::vector<double> lp(p.categories());
    ggum_eval(p, theta, lp, {});
    return exp_all(lp);
}

CategoryDistribution nrm_category_probs(const NrmItemParams& p, double theta) {
    std::vector<double> lp(p.categories());
    nrm_eval(p, theta, lp, {});
    return exp_all(lp);
}

CategoryDistribution category_probs(const ItemParams& p, double theta) {
    std::vector<double> lp(category_count(p));
    log_category_probs(p, theta, lp);
    return exp_all(lp);
}

void log_category_probs(const ItemParams& p, double theta, std::span<double> out) {
    log_probs_with_jacobian(p, theta, out, {});
}

void log_probs_with_jacobian(const ItemParams& p, double theta, std::span<double> logp, std::span<double> jac) {
    struct {
        double theta;
        std::span<double> logp, jac;
        void operator()(const GrmItemParams& q) const { grm_eval(q, theta, logp, jac); }
        void operator()(const GgumItemParams& q) const { ggum_eval(q, theta, logp, jac); }
        void operator()(const NrmItemParams& q) const { nrm_eval(q, theta, logp, jac); }
    } v{theta, logp, jac};
    std::visit(v, p);
}

double dlog_prob_dtheta(const ItemParams& p, double theta, std::size_t k) {
    struct {
        double theta;
        std::size_t k;
        double operator()(const GrmItemParams& q) const { return grm_dtheta(q, theta, k); }
        double operator()(const GgumItemParams& q) const { return ggum_dtheta(q, theta, k); }
        double operator()(const NrmItemParams& q) const { return nrm_dtheta(q, theta, k); }
    } v{theta, k};
    return std::visit(v, p);
}

void ItemBank::validate() const {
    if (items.empty()) throw ParameterError("item bank is empty");
    for (const auto& it : items) {
        if (model_of(it.params) != model) {
            throw ParameterError("item '" + it.id + "' parameters do not belong to model " +
                                 std::string(to_string(model)));
        }
        polyscale::validate(it.params);
        if (it.categories.size() != category_count(it.params)) {
            throw ParameterError("item '" + it.id + "': category list does not match parameter layout");
        }
        if (!std::is_sorted(it.categories.begin(), it.categories.end()) ||
            std::adjacent_find(it.categories.begin(), it.categories.end()) != it.categories.end()) {
            throw ParameterError("item '" + it.id + "': category codes must be strictly ascending");
        }
    }
}

namespace {

void check_response(const CalibratedItem& item, std::size_t k) {
    if (k >= item.categories.size()) {
        throw DataError("item '" + item.id + "': category position " + std::to_string(k) + " outside its " +
                        std::to_string(item.categories.size()) + " categories");
    }
}

}  // namespace

double person_loglik(const ItemBank& bank, ResponseVector responses, double theta) {
    if (responses.size() != bank.items.size()) throw DataError("response vector not aligned with items");
    double ll = 0;
    std::vector<double> lp;
    for (std::size_t i = 0; i < responses.size(); ++i) {
        if (!responses[i]) continue;
        const auto& item = bank.items[i];
        check_response(item, *responses[i]);
        lp.resize(item.categories.size());
        log_category_probs(item.params, theta, lp);
        ll += lp[*responses[i]];
    }
    return ll;
}

double person_loglik_dtheta(const ItemBank& bank, ResponseVector responses, double theta) {
    if (responses.size() != bank.items.size()) throw DataError("response vector not aligned with items");
    double g = 0;
    for (std::size_t i = 0; i < responses.size(); ++i) {
        if (!responses[i]) continue;
        check_response(bank.items[i], *responses[i]);
        g += dlog_prob_dtheta(bank.items[i].params, theta, *responses[i]);
    }
    return g;
}

}  // namespace polyscale
