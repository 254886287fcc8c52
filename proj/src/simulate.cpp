#include "polyscale/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include <boost/math/distributions/normal.hpp>
#include <json.hpp>

#include "polyscale/error.hpp"
#include "polyscale/param_io.hpp"
#include "polyscale/parallel.hpp"

namespace polyscale {

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
    std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace

Rng::Rng(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t x = seed;
    std::uint64_t mixed = splitmix64(x) ^ (stream * 0xd1b54a32d192ed03ULL);
    for (auto& w : s_) w = splitmix64(mixed);
}

std::uint64_t Rng::next() {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
}

double Rng::uniform() {
    // (k + 0.5) / 2^53 keeps the draw away from 0 and 1.
    return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53;
}

void SimSpec::validate() const {
    bank.validate();
    if (n == 0) throw ConfigError("simulation needs n > 0");
    if (!(missing_rate >= 0 && missing_rate < 1)) throw ConfigError("missing_rate must lie in [0, 1)");
    if (!(theta_sd > 0)) throw ConfigError("theta sd must be positive");
}

Simulation simulate(const SimSpec& spec, std::size_t threads) {
    spec.validate();
    static const boost::math::normal_distribution<double> std_normal;
    const std::size_t ni = spec.bank.items.size();
    Simulation sim;
    auto& m = sim.responses;
    for (const auto& it : spec.bank.items) m.items.push_back(ItemInfo{it.id, it.categories});
    m.codes.resize(spec.n * ni);
    m.weights.assign(spec.n, 1.0);
    for (std::size_t n = 0; n < spec.n; ++n) m.person_ids.push_back(std::to_string(n + 1));
    sim.theta.resize(spec.n);
    std::vector<std::optional<std::string>> labels(spec.group_rule ? spec.n : 0);

    parallel_for(spec.n, threads, [&](std::size_t begin, std::size_t end) {
        std::vector<double> probs;
        for (std::size_t n = begin; n < end; ++n) {
            double u_theta = 0;
            if (spec.antithetic) {
                Rng pair(spec.seed, n & ~std::size_t{1});
                u_theta = pair.uniform();
                if (n & 1) u_theta = 1.0 - u_theta;
            }
            Rng rng(spec.seed, n);
            double u0 = rng.uniform();
            if (!spec.antithetic) u_theta = u0;
            const double theta = spec.theta_mean + spec.theta_sd * boost::math::quantile(std_normal, u_theta);
            sim.theta[n] = theta;
            const double u_group = rng.uniform();
            if (spec.group_rule) {
                const auto& g = *spec.group_rule;
                const double p_high = 1.0 / (1.0 + std::exp(-(g.intercept + g.slope * theta)));
                labels[n] = u_group < p_high ? g.high_label : g.low_label;
            }
            for (std::size_t i = 0; i < ni; ++i) {
                const double u_missing = rng.uniform();
                const double u_cat = rng.uniform();
                if (u_missing < spec.missing_rate) continue;
                const auto& item = spec.bank.items[i];
                probs = category_probs(item.params, theta);
                double acc = 0;
                std::size_t k = 0;
                for (; k + 1 < probs.size(); ++k) {
                    acc += probs[k];
                    if (u_cat < acc) break;
                }
                m.codes[n * ni + i] = item.categories[k];
            }
        }
    });
    if (spec.group_rule) m.groups.push_back(GroupColumn{spec.group_rule->name, std::move(labels)});
    return sim;
}

ResponseMatrix simulate_responses(const SimSpec& spec, std::size_t threads) {
    return simulate(spec, threads).responses;
}

SimSpec sim_spec_from_json_text(const std::string& text) {
    SimSpec spec;
    spec.bank = import_params(text);
    auto doc = nlohmann::json::parse(text);
    if (!doc.contains("n") || !doc["n"].is_number_unsigned())
        throw ConfigError("simulation spec needs a positive integer \"n\"");
    spec.n = doc["n"].get<std::size_t>();
    if (doc.contains("seed")) {
        if (!doc["seed"].is_number_unsigned()) throw ConfigError("\"seed\" must be a nonnegative integer");
        spec.seed = doc["seed"].get<std::uint64_t>();
    }
    spec.missing_rate = doc.value("missing_rate", 0.0);
    spec.antithetic = doc.value("antithetic", false);
    if (doc.contains("theta")) {
        spec.theta_mean = doc["theta"].value("mean", 0.0);
        spec.theta_sd = doc["theta"].value("sd", 1.0);
    }
    if (doc.contains("group_rule")) {
        const auto& g = doc["group_rule"];
        GroupRule r;
        r.name = g.value("name", r.name);
        r.intercept = g.value("intercept", r.intercept);
        r.slope = g.value("slope", r.slope);
        r.low_label = g.value("low_label", r.low_label);
        r.high_label = g.value("high_label", r.high_label);
        spec.group_rule = r;
    }
    spec.validate();
    return spec;
}

SimSpec load_sim_spec(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open simulation spec " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return sim_spec_from_json_text(ss.str());
}

std::string sim_spec_to_json_text(const SimSpec& spec) {
    auto doc = nlohmann::ordered_json::parse(export_params(spec.bank));
    doc["n"] = spec.n;
    doc["seed"] = spec.seed;
    doc["missing_rate"] = spec.missing_rate;
    doc["antithetic"] = spec.antithetic;
    doc["theta"] = {{"mean", spec.theta_mean}, {"sd", spec.theta_sd}};
    if (spec.group_rule) {
        const auto& g = *spec.group_rule;
        doc["group_rule"] = {{"name", g.name},
                             {"intercept", g.intercept},
                             {"slope", g.slope},
                             {"low_label", g.low_label},
                             {"high_label", g.high_label}};
    }
    return doc.dump(2) + "\n";
}

namespace {

struct Named {
    std::string param;
    std::size_t index;
    double value;
};

std::vector<Named> flatten(const ItemParams& p, bool reflect) {
    std::vector<Named> out;
    std::visit(
        [&](const auto& q) {
            using T = std::decay_t<decltype(q)>;
            if constexpr (std::is_same_v<T, GrmItemParams>) {
                out.push_back({"a", 0, q.a});
                for (std::size_t j = 0; j < q.d.size(); ++j) out.push_back({"d", j, q.d[j]});
            } else if constexpr (std::is_same_v<T, GgumItemParams>) {
                out.push_back({"a", 0, q.a});
                out.push_back({"d", 0, reflect ? -q.d : q.d});
                for (std::size_t j = 0; j < q.tau.size(); ++j) out.push_back({"tau", j, q.tau[j]});
            } else {
                auto c = q.centered();
                for (std::size_t k = 0; k < c.a.size(); ++k) out.push_back({"a", k, reflect ? -c.a[k] : c.a[k]});
                for (std::size_t k = 0; k < c.c.size(); ++k) out.push_back({"c", k, c.c[k]});
            }
        },
        p);
    return out;
}

NrmItemParams permuted(const NrmItemParams& p, const std::vector<std::size_t>& perm) {
    NrmItemParams out;
    for (auto k : perm) {
        out.a.push_back(p.a[k]);
        out.c.push_back(p.c[k]);
    }
    return out;
}

double sq_error(const std::vector<Named>& a, const std::vector<Named>& b) {
    double s = 0;
    for (std::size_t j = 0; j < a.size(); ++j) s += (a[j].value - b[j].value) * (a[j].value - b[j].value);
    return s;
}

struct Alignment {
    double error = 0;
    std::vector<ItemParams> params;
    std::vector<std::vector<std::size_t>> perms;
};

Alignment align(const ItemBank& truth, const ItemBank& est, bool reflect) {
    Alignment al;
    for (std::size_t i = 0; i < truth.items.size(); ++i) {
        const auto& tp = truth.items[i].params;
        const auto& ep = est.items[i].params;
        const std::size_t m = category_count(tp);
        std::vector<std::size_t> perm(m);
        std::iota(perm.begin(), perm.end(), 0);
        if (truth.model == ModelKind::nrm) {
            if (m > 8) throw DataError("recovery alignment supports at most 8 NRM categories");
            const auto& en = std::get<NrmItemParams>(ep);
            auto t_flat = flatten(tp, false);
            std::vector<std::size_t> best = perm;
            double best_err = std::numeric_limits<double>::infinity();
            do {
                double e = sq_error(t_flat, flatten(permuted(en, perm), reflect));
                if (e < best_err) {
                    best_err = e;
                    best = perm;
                }
            } while (std::next_permutation(perm.begin(), perm.end()));
            al.error += best_err;
            al.params.emplace_back(permuted(en, best));
            al.perms.push_back(best);
        } else {
            al.error += sq_error(flatten(tp, false), flatten(ep, reflect));
            al.params.push_back(ep);
            al.perms.push_back(perm);
        }
    }
    return al;
}

}  // namespace

RecoveryReport recovery_report(const ItemBank& truth, const ItemBank& estimate) {
    truth.validate();
    estimate.validate();
    if (truth.model != estimate.model) throw DataError("recovery alignment failed: models differ");
    if (truth.items.size() != estimate.items.size()) throw DataError("recovery alignment failed: item counts differ");
    for (std::size_t i = 0; i < truth.items.size(); ++i) {
        if (truth.items[i].id != estimate.items[i].id ||
            category_count(truth.items[i].params) != category_count(estimate.items[i].params)) {
            throw DataError("recovery alignment failed for item '" + truth.items[i].id + "'");
        }
    }
    RecoveryReport rep;
    Alignment al = align(truth, estimate, false);
    if (truth.model != ModelKind::grm) {
        Alignment flipped = align(truth, estimate, true);
        if (flipped.error < al.error) {
            al = std::move(flipped);
            rep.reflected = true;
        }
    }
    rep.permutations = al.perms;
    for (std::size_t i = 0; i < truth.items.size(); ++i) {
        auto t = flatten(truth.items[i].params, false);
        auto e = flatten(al.params[i], rep.reflected);
        for (std::size_t j = 0; j < t.size(); ++j)
            rep.rows.push_back({truth.items[i].id, t[j].param, t[j].index, t[j].value, e[j].value});
    }
    std::map<std::string, std::pair<double, double>> sums;
    for (const auto& r : rep.rows) {
        for (const std::string& key : {r.param, std::string("all")}) {
            auto& s = rep.stats[key];
            const double err = r.estimate - r.truth;
            sums[key].first += err;
            sums[key].second += err * err;
            ++s.count;
        }
    }
    for (auto& [key, s] : rep.stats) {
        s.bias = sums[key].first / static_cast<double>(s.count);
        s.rmse = std::sqrt(sums[key].second / static_cast<double>(s.count));
    }
    return rep;
}

}  // namespace polyscale
