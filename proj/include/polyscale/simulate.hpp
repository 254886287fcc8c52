#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "polyscale/ingest.hpp"
#include "polyscale/models.hpp"

namespace polyscale {

/// xoshiro256** whose state is filled by SplitMix64 from (seed, stream).
/// Every person gets its own stream so draws do not depend on scheduling.
class Rng {
public:
    Rng(std::uint64_t seed, std::uint64_t stream);
    std::uint64_t next();
    /// Uniform on the open interval (0, 1), 53-bit resolution.
    double uniform();

private:
    std::array<std::uint64_t, 4> s_{};
};

/// Binary group membership linked to theta: P(high) = logistic(intercept + slope theta).
struct GroupRule {
    std::string name = "group";
    double intercept = 0.0;
    double slope = 1.0;
    std::string low_label = "low";
    std::string high_label = "high";
};

struct SimSpec {
    ItemBank bank;
    std::size_t n = 0;
    std::uint64_t seed = 1;
    double missing_rate = 0.0;  // per cell, in [0, 1)
    double theta_mean = 0.0;
    double theta_sd = 1.0;
    /// Pair persons (2j, 2j+1) on u and 1 - u for the theta draw.
    bool antithetic = false;
    std::optional<GroupRule> group_rule;

    void validate() const;
};

struct Simulation {
    ResponseMatrix responses;
    std::vector<double> theta;
};

/// theta_n = mean + sd * Phi^{-1}(u), then each item's category by inverse-CDF
/// sampling from its category distribution at theta_n.
Simulation simulate(const SimSpec& spec, std::size_t threads = 1);
ResponseMatrix simulate_responses(const SimSpec& spec, std::size_t threads = 1);

/// SimSpec file: a parameter file plus {"n", "seed", "missing_rate"} and an
/// optional "group_rule" {name, intercept, slope, low_label, high_label}.
SimSpec sim_spec_from_json_text(const std::string& text);
SimSpec load_sim_spec(const std::filesystem::path& path);
std::string sim_spec_to_json_text(const SimSpec& spec);

struct RecoveryRow {
    std::string item;
    std::string param;  // "a", "d", "tau", "c"
    std::size_t index = 0;
    double truth = 0;
    double estimate = 0;
};

struct RecoveryStat {
    double bias = 0;
    double rmse = 0;
    std::size_t count = 0;
};

struct RecoveryReport {
    std::vector<RecoveryRow> rows;
    /// Keyed by parameter name, plus "all".
    std::map<std::string, RecoveryStat> stats;
    /// Reflection theta -> -theta applied to the estimate before comparison.
    bool reflected = false;
    /// Per item, estimate category position matched to each truth position (NRM).
    std::vector<std::vector<std::size_t>> permutations;
};

/// Compares an estimate with the generating parameters. NRM items are
/// centered and matched over category permutations (up to 8 categories);
/// NRM and GGUM are also checked under the global reflection of theta.
/// Throws DataError when items or layouts cannot be aligned.
RecoveryReport recovery_report(const ItemBank& truth, const ItemBank& estimate);

}  // namespace polyscale
