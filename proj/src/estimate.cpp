#include "polyscale/estimate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include <boost/math/distributions/normal.hpp>

#include "polyscale/compare.hpp"
#include "polyscale/error.hpp"
#include "polyscale/optimize.hpp"
#include "polyscale/parallel.hpp"

namespace polyscale {

void QuadratureGrid::validate() const {
    if (nodes.size() != weights.size() || nodes.empty()) throw ConfigError("quadrature grid is malformed");
    double s = 0;
    for (std::size_t q = 0; q < nodes.size(); ++q) {
        if (q && !(nodes[q] > nodes[q - 1])) throw ConfigError("quadrature nodes must be strictly increasing");
        if (!(weights[q] >= 0)) throw ConfigError("quadrature weights must be nonnegative");
        s += weights[q];
    }
    if (std::abs(s - 1.0) > 1e-10) throw ConfigError("quadrature weights must sum to 1");
}

QuadratureGrid make_grid(std::size_t n_points, double bound) {
    if (n_points < 11) throw ConfigError("quadrature needs at least 11 points");
    if (!(bound > 0)) throw ConfigError("quadrature bound must be positive");
    QuadratureGrid g;
    const double step = 2.0 * bound / static_cast<double>(n_points - 1);
    double total = 0;
    for (std::size_t q = 0; q < n_points; ++q) {
        // Mirror the upper half so the grid is exactly symmetric.
        double x = q < n_points / 2 ? -bound + step * static_cast<double>(q)
                                    : bound - step * static_cast<double>(n_points - 1 - q);
        if (n_points % 2 == 1 && q == n_points / 2) x = 0.0;
        g.nodes.push_back(x);
        g.weights.push_back(std::exp(-0.5 * x * x));
        total += g.weights.back();
    }
    for (auto& w : g.weights) w /= total;
    return g;
}

std::vector<std::optional<std::size_t>> align_responses(const ItemBank& bank, const ResponseMatrix& m) {
    const std::size_t ni = bank.items.size();
    std::vector<std::size_t> cols;
    for (const auto& it : bank.items) {
        bool found = false;
        for (std::size_t i = 0; i < m.item_count(); ++i)
            if (m.items[i].id == it.id) {
                cols.push_back(i);
                found = true;
                break;
            }
        if (!found) throw DataError("item '" + it.id + "' from the parameter file is not in the data");
    }
    std::vector<std::optional<std::size_t>> out(m.persons() * ni);
    for (std::size_t n = 0; n < m.persons(); ++n) {
        for (std::size_t i = 0; i < ni; ++i) {
            auto c = m.code(n, cols[i]);
            if (!c) continue;
            const auto& cats = bank.items[i].categories;
            auto pos = std::lower_bound(cats.begin(), cats.end(), *c);
            if (pos == cats.end() || *pos != *c) {
                throw DataError("person '" + m.person_ids[n] + "' item '" + bank.items[i].id + "': category " +
                                std::to_string(*c) + " is absent from the parameter layout");
            }
            out[n * ni + i] = static_cast<std::size_t>(pos - cats.begin());
        }
    }
    return out;
}

namespace {

constexpr std::size_t kNoResponse = std::numeric_limits<std::size_t>::max();

// log P tables per item: [q * m + k].
std::vector<std::vector<double>> log_prob_tables(const ItemBank& bank, const QuadratureGrid& grid) {
    std::vector<std::vector<double>> out;
    for (const auto& it : bank.items) {
        const std::size_t mcat = it.categories.size();
        std::vector<double> t(grid.nodes.size() * mcat);
        for (std::size_t q = 0; q < grid.nodes.size(); ++q)
            log_category_probs(it.params, grid.nodes[q], std::span<double>(t.data() + q * mcat, mcat));
        out.push_back(std::move(t));
    }
    return out;
}

struct EStep {
    std::vector<double> person_ll;  // per person
    std::vector<double> posterior;  // persons × nodes
};

EStep e_step(const std::vector<std::vector<double>>& tables, const std::vector<std::size_t>& mcats,
             const std::vector<std::size_t>& resp, std::size_t n_persons, const QuadratureGrid& grid,
             std::size_t threads, bool keep_posterior) {
    const std::size_t nq = grid.nodes.size();
    const std::size_t ni = tables.size();
    std::vector<double> log_w(nq);
    for (std::size_t q = 0; q < nq; ++q) log_w[q] = std::log(grid.weights[q]);
    EStep es;
    es.person_ll.resize(n_persons);
    if (keep_posterior) es.posterior.resize(n_persons * nq);
    parallel_for(n_persons, threads, [&](std::size_t begin, std::size_t end) {
        std::vector<double> ll(nq);
        for (std::size_t n = begin; n < end; ++n) {
            ll = log_w;
            for (std::size_t i = 0; i < ni; ++i) {
                std::size_t k = resp[n * ni + i];
                if (k == kNoResponse) continue;
                const double* t = tables[i].data();
                for (std::size_t q = 0; q < nq; ++q) ll[q] += t[q * mcats[i] + k];
            }
            double lse = detail::log_sum_exp(ll);
            es.person_ll[n] = lse;
            if (keep_posterior) {
                double* post = es.posterior.data() + n * nq;
                for (std::size_t q = 0; q < nq; ++q) post[q] = std::exp(ll[q] - lse);
            }
        }
    });
    return es;
}

// Neumaier-compensated sum in index order.
double stable_sum(const std::vector<double>& xs) {
    double s = 0, c = 0;
    for (double x : xs) {
        double t = s + x;
        if (std::abs(s) >= std::abs(x))
            c += (s - t) + x;
        else
            c += (x - t) + s;
        s = t;
    }
    return s + c;
}

// Maps unconstrained optimizer coordinates to item parameters and back.
struct Transform {
    ModelKind model;
    std::size_t mcat;

    std::vector<double> to_free(const ItemParams& p) const {
        std::vector<double> x;
        switch (model) {
            case ModelKind::grm: {
                const auto& g = std::get<GrmItemParams>(p);
                x.push_back(std::log(g.a));
                x.push_back(g.d[0]);
                for (std::size_t j = 1; j < g.d.size(); ++j) x.push_back(std::log(g.d[j] - g.d[j - 1]));
                break;
            }
            case ModelKind::ggum: {
                const auto& g = std::get<GgumItemParams>(p);
                x.push_back(std::log(g.a));
                x.push_back(g.d);
                x.insert(x.end(), g.tau.begin(), g.tau.end());
                break;
            }
            case ModelKind::nrm: {
                const auto& g = std::get<NrmItemParams>(p);
                x = g.a;
                x.insert(x.end(), g.c.begin(), g.c.end());
                break;
            }
        }
        return x;
    }

    ItemParams from_free(std::span<const double> x) const {
        switch (model) {
            case ModelKind::grm: {
                GrmItemParams g;
                g.a = std::exp(x[0]);
                g.d.push_back(x[1]);
                for (std::size_t j = 2; j < x.size(); ++j) g.d.push_back(g.d.back() + std::exp(x[j]));
                return g;
            }
            case ModelKind::ggum: {
                GgumItemParams g;
                g.a = std::exp(x[0]);
                g.d = x[1];
                g.tau.assign(x.begin() + 2, x.end());
                return g;
            }
            case ModelKind::nrm: {
                NrmItemParams g;
                g.a.assign(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(mcat));
                g.c.assign(x.begin() + static_cast<std::ptrdiff_t>(mcat), x.end());
                return g;
            }
        }
        return GrmItemParams{};
    }

    // Chain rule from natural-parameter gradient to free coordinates.
    void pull_back(std::span<const double> x, std::span<const double> natural, std::span<double> grad) const {
        switch (model) {
            case ModelKind::grm: {
                const std::size_t nb = natural.size() - 1;
                grad[0] = natural[0] * std::exp(x[0]);
                double tail = 0;
                for (std::size_t j = nb; j-- > 1;) {
                    tail += natural[1 + j];
                    grad[1 + j] = tail * std::exp(x[1 + j]);
                }
                grad[1] = tail + natural[1];
                break;
            }
            case ModelKind::ggum:
                grad[0] = natural[0] * std::exp(x[0]);
                for (std::size_t j = 1; j < natural.size(); ++j) grad[j] = natural[j];
                break;
            case ModelKind::nrm:
                for (std::size_t j = 0; j < natural.size(); ++j) grad[j] = natural[j];
                break;
        }
    }
};

// Expected complete-data log-likelihood of one item and its gradient.
struct ItemObjective {
    const Transform& tr;
    const QuadratureGrid& grid;
    const std::vector<double>& counts;  // [q * m + k]

    double operator()(std::span<const double> x, std::span<double> grad) const {
        ItemParams p = tr.from_free(x);
        const std::size_t m = tr.mcat;
        const std::size_t np = natural_param_count(p);
        std::vector<double> logp(m), jac(m * np), nat(np, 0.0);
        double value = 0;
        for (std::size_t q = 0; q < grid.nodes.size(); ++q) {
            log_probs_with_jacobian(p, grid.nodes[q], logp, jac);
            for (std::size_t k = 0; k < m; ++k) {
                const double r = counts[q * m + k];
                if (r == 0) continue;
                value += r * logp[k];
                for (std::size_t j = 0; j < np; ++j) nat[j] += r * jac[k * np + j];
            }
        }
        tr.pull_back(x, nat, grad);
        if (!std::isfinite(value)) return -std::numeric_limits<double>::infinity();
        return value;
    }
};

double normal_quantile(double p) {
    static const boost::math::normal_distribution<double> std_normal;
    return boost::math::quantile(std_normal, p);
}

// Logistic slope-one boundary whose marginal exceedance over N(0,1) is p.
constexpr double kLogitProbitScale = 1.9720;  // sqrt(1 + 1.702^2)

struct ItemData {
    std::vector<int> categories;        // observed codes, ascending
    std::vector<double> counts;         // per observed category
    std::vector<std::size_t> remap;     // scheme position -> observed position or kNoResponse
};

ItemParams start_values(ModelKind model, const ItemData& d, const std::vector<double>& rest_means) {
    const std::size_t m = d.categories.size();
    const double total = std::accumulate(d.counts.begin(), d.counts.end(), 0.0);
    std::vector<double> p(m);
    for (std::size_t k = 0; k < m; ++k) p[k] = (d.counts[k] + 0.5) / (total + 0.5 * static_cast<double>(m));
    switch (model) {
        case ModelKind::grm: {
            GrmItemParams g;
            g.a = 1.0;
            double above = 1.0;
            for (std::size_t j = 0; j + 1 < m; ++j) {
                above -= p[j];
                double pj = std::clamp(above, 1e-3, 1.0 - 1e-3);
                double dj = -kLogitProbitScale * normal_quantile(pj);
                if (!g.d.empty()) dj = std::max(dj, g.d.back() + 0.05);
                g.d.push_back(dj);
            }
            return g;
        }
        case ModelKind::ggum: {
            GgumItemParams g;
            g.a = 1.0;
            g.d = 0.0;
            for (std::size_t j = 1; j < m; ++j) g.tau.push_back(std::clamp(std::log(p[j - 1] / p[j]), -3.0, 3.0));
            return g;
        }
        case ModelKind::nrm: {
            NrmItemParams g;
            double mean_log = 0;
            for (std::size_t k = 0; k < m; ++k) mean_log += std::log(p[k]);
            mean_log /= static_cast<double>(m);
            for (std::size_t k = 0; k < m; ++k) {
                g.a.push_back(1.7 * rest_means[k]);
                g.c.push_back(std::log(p[k]) - mean_log);
            }
            return g.centered();
        }
    }
    return GrmItemParams{};
}

}  // namespace

double marginal_loglik(const ItemBank& bank, const ResponseMatrix& m, const QuadratureGrid& grid,
                       std::size_t threads) {
    grid.validate();
    auto aligned = align_responses(bank, m);
    std::vector<std::size_t> resp(aligned.size());
    for (std::size_t j = 0; j < aligned.size(); ++j) resp[j] = aligned[j].value_or(kNoResponse);
    std::vector<std::size_t> mcats;
    for (const auto& it : bank.items) mcats.push_back(it.categories.size());
    auto es = e_step(log_prob_tables(bank, grid), mcats, resp, m.persons(), grid, threads, false);
    return stable_sum(es.person_ll);
}

FitResult fit_em(const ResponseMatrix& m, ModelKind model, const QuadratureGrid& grid, const EmOptions& opts) {
    m.validate();
    grid.validate();
    const std::size_t n_persons = m.persons();
    const std::size_t ni = m.item_count();
    const std::size_t nq = grid.nodes.size();
    FitResult fit;
    fit.model = model;
    fit.n_persons = n_persons;

    // Observed layout per item.
    std::vector<ItemData> data(ni);
    for (std::size_t i = 0; i < ni; ++i) {
        const auto& cats = m.items[i].categories;
        std::vector<double> counts(cats.size(), 0.0);
        for (std::size_t n = 0; n < n_persons; ++n)
            if (auto k = m.category_index(n, i)) counts[*k] += 1;
        auto& d = data[i];
        d.remap.assign(cats.size(), kNoResponse);
        for (std::size_t k = 0; k < cats.size(); ++k) {
            if (counts[k] > 0) {
                d.remap[k] = d.categories.size();
                d.categories.push_back(cats[k]);
                d.counts.push_back(counts[k]);
            } else {
                fit.warnings.push_back("item '" + m.items[i].id + "': category " + std::to_string(cats[k]) +
                                       " never observed; dropped from the fitted layout");
            }
        }
        if (d.categories.size() < 2) {
            throw DataError("item '" + m.items[i].id + "' has fewer than two observed categories; cannot be fitted");
        }
    }

    std::vector<std::size_t> resp(n_persons * ni, kNoResponse);
    for (std::size_t n = 0; n < n_persons; ++n)
        for (std::size_t i = 0; i < ni; ++i)
            if (auto k = m.category_index(n, i)) resp[n * ni + i] = data[i].remap[*k];

    // Standardized rest scores seed the NRM slopes.
    std::vector<double> item_mean(ni, 0), item_sd(ni, 1);
    for (std::size_t i = 0; i < ni; ++i) {
        double s = 0, ss = 0, c = 0;
        for (std::size_t n = 0; n < n_persons; ++n)
            if (resp[n * ni + i] != kNoResponse) {
                double v = static_cast<double>(resp[n * ni + i]);
                s += v;
                ss += v * v;
                c += 1;
            }
        item_mean[i] = s / c;
        item_sd[i] = std::sqrt(std::max(ss / c - item_mean[i] * item_mean[i], 1e-12));
    }

    fit.bank.model = model;
    for (std::size_t i = 0; i < ni; ++i) {
        const std::size_t mcat = data[i].categories.size();
        std::vector<double> rest_sum(mcat, 0), rest_n(mcat, 0);
        double all_sum = 0, all_n = 0;
        for (std::size_t n = 0; n < n_persons; ++n) {
            std::size_t k = resp[n * ni + i];
            if (k == kNoResponse) continue;
            double z = 0;
            int q = 0;
            for (std::size_t j = 0; j < ni; ++j) {
                if (j == i || resp[n * ni + j] == kNoResponse) continue;
                z += (static_cast<double>(resp[n * ni + j]) - item_mean[j]) / item_sd[j];
                ++q;
            }
            if (q == 0) continue;
            rest_sum[k] += z / q;
            rest_n[k] += 1;
            all_sum += z / q;
            all_n += 1;
        }
        std::vector<double> rest_means(mcat, 0.0);
        const double overall = all_n > 0 ? all_sum / all_n : 0.0;
        for (std::size_t k = 0; k < mcat; ++k) {
            if (all_n > 0 && rest_n[k] > 0)
                rest_means[k] = rest_sum[k] / rest_n[k] - overall;
            else if (all_n == 0)
                rest_means[k] = 0.5 * (static_cast<double>(k) - 0.5 * static_cast<double>(mcat - 1));
        }
        fit.bank.items.push_back(
            CalibratedItem{m.items[i].id, data[i].categories, start_values(model, data[i], rest_means)});
    }

    std::vector<std::size_t> mcats;
    for (const auto& d : data) mcats.push_back(d.categories.size());
    fit.n_params = free_param_count(model, mcats);
    if (n_persons < 10 * fit.n_params) {
        std::ostringstream os;
        os << "sample size " << n_persons << " is below 10x the " << fit.n_params << " free parameters";
        fit.warnings.push_back(os.str());
    }

    std::vector<Transform> transforms;
    for (std::size_t i = 0; i < ni; ++i) transforms.push_back(Transform{model, mcats[i]});

    optim::BfgsOptions bfgs;
    bfgs.max_iter = 200;
    const double bound = std::max(std::abs(grid.nodes.front()), std::abs(grid.nodes.back()));
    const double ggum_starts[3] = {-0.5 * bound, 0.0, 0.5 * bound};

    for (int iter = 0;; ++iter) {
        auto tables = log_prob_tables(fit.bank, grid);
        auto es = e_step(tables, mcats, resp, n_persons, grid, opts.threads, true);
        const double ll = stable_sum(es.person_ll);
        fit.ll_trace.push_back(ll);
        fit.loglik = ll;
        fit.iterations = iter;
        if (iter > 0 && std::abs(ll - fit.ll_trace[iter - 1]) < opts.tol_ll) {
            fit.converged = true;
            break;
        }
        if (iter >= opts.max_iter) break;

        // Expected category counts per node, accumulated in person order.
        std::vector<std::vector<double>> counts(ni);
        parallel_for(ni, opts.threads, [&](std::size_t begin, std::size_t end) {
            for (std::size_t i = begin; i < end; ++i) {
                auto& r = counts[i];
                r.assign(nq * mcats[i], 0.0);
                for (std::size_t n = 0; n < n_persons; ++n) {
                    std::size_t k = resp[n * ni + i];
                    if (k == kNoResponse) continue;
                    const double* post = es.posterior.data() + n * nq;
                    for (std::size_t q = 0; q < nq; ++q) r[q * mcats[i] + k] += post[q];
                }
            }
        });

        parallel_for(ni, opts.threads, [&](std::size_t begin, std::size_t end) {
            for (std::size_t i = begin; i < end; ++i) {
                ItemObjective obj{transforms[i], grid, counts[i]};
                auto x0 = transforms[i].to_free(fit.bank.items[i].params);
                auto best = optim::maximize_bfgs(obj, x0, bfgs);
                if (model == ModelKind::ggum) {
                    for (double d0 : ggum_starts) {
                        auto xs = x0;
                        xs[1] = d0;
                        auto cand = optim::maximize_bfgs(obj, xs, bfgs);
                        if (cand.value > best.value) best = std::move(cand);
                    }
                }
                ItemParams next = transforms[i].from_free(best.x);
                if (model == ModelKind::nrm) next = std::get<NrmItemParams>(next).centered();
                fit.bank.items[i].params = std::move(next);
            }
        });
    }

    // Orient the scale so higher category codes go with higher theta. The
    // reflection theta -> -theta leaves the marginal likelihood unchanged.
    if (model == ModelKind::nrm) {
        double orient = 0;
        for (const auto& it : fit.bank.items) {
            const auto& p = std::get<NrmItemParams>(it.params);
            for (std::size_t k = 0; k < p.a.size(); ++k)
                orient += p.a[k] * (static_cast<double>(k) - 0.5 * static_cast<double>(p.a.size() - 1));
        }
        if (orient < 0)
            for (auto& it : fit.bank.items)
                for (auto& a : std::get<NrmItemParams>(it.params).a) a = -a;
    } else if (model == ModelKind::ggum) {
        double orient = 0;
        for (const auto& it : fit.bank.items) orient += std::get<GgumItemParams>(it.params).d;
        if (orient < 0)
            for (auto& it : fit.bank.items) {
                auto& p = std::get<GgumItemParams>(it.params);
                p.d = -p.d;
            }
    }

    if (!fit.converged) {
        std::ostringstream os;
        os << to_string(model) << " EM did not converge within " << opts.max_iter << " iterations";
        fit.warnings.push_back(os.str());
    }
    auto ic = information_criteria(fit.loglik, fit.n_params, n_persons);
    fit.aic = ic.aic;
    fit.bic = ic.bic;
    return fit;
}

namespace {

struct Posterior {
    const ItemBank& bank;
    ResponseVector responses;
    const MapSettings& s;

    double value(double theta) const {
        const double z = (theta - s.prior_mean) / s.prior_sd;
        return -0.5 * z * z + person_loglik(bank, responses, theta);
    }
    double slope(double theta) const {
        return -(theta - s.prior_mean) / (s.prior_sd * s.prior_sd) + person_loglik_dtheta(bank, responses, theta);
    }
};

}  // namespace

PersonScore map_score(const ItemBank& bank, ResponseVector responses, const MapSettings& settings) {
    if (responses.size() != bank.items.size()) throw DataError("response vector not aligned with items");
    PersonScore out;
    for (const auto& r : responses)
        if (r) ++out.n_observed;
    if (out.n_observed == 0) {
        out.theta = settings.prior_mean;
        out.se = settings.prior_sd;
        return out;
    }
    Posterior post{bank, responses, settings};

    const double lo = -settings.bound, hi = settings.bound;
    const auto steps = static_cast<std::size_t>(std::ceil((hi - lo) / settings.scan_step));
    std::vector<double> modes;
    double prev_t = lo, prev_g = post.slope(lo);
    if (prev_g < 0) modes.push_back(lo);
    for (std::size_t j = 1; j <= steps; ++j) {
        double t = j == steps ? hi : lo + settings.scan_step * static_cast<double>(j);
        double g = post.slope(t);
        if (prev_g > 0 && g <= 0) {
            double a = prev_t, b = t;
            while (b - a > settings.tol) {
                double mid = 0.5 * (a + b);
                (post.slope(mid) > 0 ? a : b) = mid;
            }
            modes.push_back(0.5 * (a + b));
        }
        prev_t = t;
        prev_g = g;
    }
    if (prev_g > 0) modes.push_back(hi);

    double best_t = modes.front(), best_v = post.value(best_t);
    for (std::size_t j = 1; j < modes.size(); ++j) {
        double v = post.value(modes[j]);
        double tie = 1e-9 * std::max(1.0, std::abs(best_v));
        if (v > best_v + tie || (std::abs(v - best_v) <= tie && std::abs(modes[j]) < std::abs(best_t))) {
            best_t = modes[j];
            best_v = v;
        }
    }
    out.theta = best_t;
    out.multimodal = modes.size() > 1;
    const double h = 1e-4;
    const double curv = (post.slope(best_t + h) - post.slope(best_t - h)) / (2 * h);
    out.se = curv < 0 ? 1.0 / std::sqrt(-curv) : std::numeric_limits<double>::quiet_NaN();
    return out;
}

std::vector<PersonScore> score_persons(const ItemBank& bank, const ResponseMatrix& m, const MapSettings& settings,
                                       std::size_t threads) {
    bank.validate();
    auto aligned = align_responses(bank, m);
    const std::size_t ni = bank.items.size();
    std::vector<PersonScore> out(m.persons());
    parallel_for(m.persons(), threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t n = begin; n < end; ++n)
            out[n] = map_score(bank, ResponseVector(aligned.data() + n * ni, ni), settings);
    });
    return out;
}

double odds(double theta) { return std::exp(theta); }

double odds_ratio(double theta_a, double theta_b) { return std::exp(theta_a - theta_b); }

}  // namespace polyscale
