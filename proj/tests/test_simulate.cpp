#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "polyscale/error.hpp"
#include "polyscale/estimate.hpp"
#include "polyscale/simulate.hpp"

using namespace polyscale;

namespace {

SimSpec spec_for(ItemBank bank, std::size_t n, std::uint64_t seed) {
    SimSpec s;
    s.bank = std::move(bank);
    s.n = n;
    s.seed = seed;
    return s;
}

ItemBank grm4() {
    ItemBank b{ModelKind::grm, {}};
    b.items.push_back({"i1", {1, 2, 3, 4}, GrmItemParams{0.8, {-1.5, 0.0, 1.4}}});
    b.items.push_back({"i2", {1, 2, 3, 4}, GrmItemParams{1.3, {-0.9, 0.4, 1.8}}});
    b.items.push_back({"i3", {1, 2, 3, 4}, GrmItemParams{1.7, {-2.0, -0.6, 0.8}}});
    b.items.push_back({"i4", {1, 2, 3, 4}, GrmItemParams{2.2, {-1.2, 0.2, 1.0}}});
    return b;
}

}  // namespace

TEST_CASE("rng") {
    Rng a(1, 0), b(1, 0), c(1, 1);
    const auto x = a.next();
    CHECK(x == b.next());
    CHECK(x != c.next());
    for (int i = 0; i < 1000; ++i) {
        const double u = a.uniform();
        CHECK(u > 0.0);
        CHECK(u < 1.0);
    }
}

TEST_CASE("flat nrm gives uniform frequencies") {
    ItemBank b{ModelKind::nrm, {{"x", {1, 2, 3, 4, 5}, NrmItemParams{{0, 0, 0, 0, 0}, {0, 0, 0, 0, 0}}}}};
    auto m = simulate_responses(spec_for(b, 10000, 42));
    std::vector<double> count(5, 0);
    for (const auto& c : m.codes) count[*c - 1] += 1;
    const double p = 0.2, bound = 3 * std::sqrt(p * (1 - p) / 10000);
    for (double k : count) CHECK(std::abs(k / 10000 - p) <= bound);
}

TEST_CASE("frequencies match marginal probabilities") {
    auto bank = grm4();
    auto m = simulate_responses(spec_for(bank, 10000, 7));
    auto grid = make_grid(201, 8.0);
    for (std::size_t i = 0; i < bank.items.size(); ++i) {
        std::vector<double> marginal(4, 0.0);
        for (std::size_t q = 0; q < grid.nodes.size(); ++q) {
            auto pr = category_probs(bank.items[i].params, grid.nodes[q]);
            for (std::size_t k = 0; k < 4; ++k) marginal[k] += grid.weights[q] * pr[k];
        }
        std::vector<double> count(4, 0);
        for (std::size_t n = 0; n < m.persons(); ++n) count[*m.code(n, i) - 1] += 1;
        for (std::size_t k = 0; k < 4; ++k) {
            const double p = marginal[k];
            CHECK(std::abs(count[k] / 10000 - p) <= 3 * std::sqrt(p * (1 - p) / 10000));
        }
    }
}

TEST_CASE("determinism and missingness") {
    auto s = spec_for(grm4(), 500, 3);
    auto a = simulate(s);
    auto b = simulate(s, 4);
    CHECK(a.responses.codes == b.responses.codes);
    CHECK(a.theta == b.theta);
    for (const auto& c : a.responses.codes) CHECK(c.has_value());

    s.missing_rate = 0.3;
    auto m = simulate_responses(s);
    std::size_t missing = 0;
    for (const auto& c : m.codes) missing += !c.has_value();
    CHECK(missing > 450);
    CHECK(missing < 750);

    s.missing_rate = 1.0;
    CHECK_THROWS_AS(s.validate(), ConfigError);
    s.missing_rate = 0;
    s.n = 0;
    CHECK_THROWS_AS(s.validate(), ConfigError);
}

TEST_CASE("antithetic pairs mirror theta") {
    auto s = spec_for(grm4(), 100, 5);
    s.antithetic = true;
    auto sim = simulate(s);
    for (std::size_t n = 0; n + 1 < 100; n += 2) CHECK(sim.theta[n] == doctest::Approx(-sim.theta[n + 1]));
}

TEST_CASE("group rule follows theta") {
    auto s = spec_for(grm4(), 2000, 9);
    s.group_rule = GroupRule{"party", 0.0, 2.0, "D", "R"};
    auto sim = simulate(s);
    const auto& g = sim.responses.group("party").labels;
    double mean_r = 0, mean_d = 0;
    std::size_t nr = 0, nd = 0;
    for (std::size_t n = 0; n < 2000; ++n) {
        if (*g[n] == "R") {
            mean_r += sim.theta[n];
            ++nr;
        } else {
            mean_d += sim.theta[n];
            ++nd;
        }
    }
    CHECK(mean_r / nr > mean_d / nd + 0.5);
}

TEST_CASE("spec file round trip") {
    auto s = spec_for(grm4(), 123, 77);
    s.missing_rate = 0.1;
    s.group_rule = GroupRule{};
    auto back = sim_spec_from_json_text(sim_spec_to_json_text(s));
    CHECK(back.n == 123);
    CHECK(back.seed == 77);
    CHECK(back.missing_rate == 0.1);
    CHECK(back.group_rule.has_value());
    CHECK(simulate_responses(back).codes == simulate_responses(s).codes);
    CHECK_THROWS_AS(sim_spec_from_json_text(R"({"format":"polyscale-params","version":1,"model":"grm",
        "items":[{"id":"x","categories":[0,1],"a":1.0,"d":[0.0]}]})"),
                    ConfigError);
}

TEST_CASE("recovery report") {
    auto truth = grm4();
    auto self = recovery_report(truth, truth);
    CHECK(self.stats.at("all").rmse == 0.0);
    CHECK(self.stats.at("a").bias == 0.0);

    ItemBank nrm{ModelKind::nrm, {{"x", {1, 2, 3}, NrmItemParams{{-1.0, 0.2, 0.8}, {0.3, 0.4, -0.7}}}}};
    ItemBank shuffled{ModelKind::nrm, {{"x", {1, 2, 3}, NrmItemParams{{0.8, -1.0, 0.2}, {-0.7, 0.3, 0.4}}}}};
    auto r = recovery_report(nrm, shuffled);
    CHECK(r.stats.at("all").rmse < 1e-12);
    CHECK(r.permutations[0] == std::vector<std::size_t>{1, 2, 0});

    ItemBank flipped{ModelKind::nrm, {{"x", {1, 2, 3}, NrmItemParams{{1.0, -0.2, -0.8}, {0.3, 0.4, -0.7}}}}};
    auto f = recovery_report(nrm, flipped);
    CHECK(f.reflected);
    CHECK(f.stats.at("all").rmse < 1e-12);

    ItemBank other = truth;
    other.items.pop_back();
    CHECK_THROWS_AS(recovery_report(truth, other), DataError);
}

TEST_CASE("recovery improves with sample size") {
    auto truth = grm4();
    auto grid = make_grid();
    double small = 0, large = 0;
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        auto fs = fit_em(simulate_responses(spec_for(truth, 50, seed)), ModelKind::grm, grid);
        auto fl = fit_em(simulate_responses(spec_for(truth, 2000, seed)), ModelKind::grm, grid);
        small += recovery_report(truth, fs.bank).stats.at("all").rmse;
        large += recovery_report(truth, fl.bank).stats.at("all").rmse;
    }
    CHECK(small > 2 * large);
}
