#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "polyscale/ingest.hpp"
#include "polyscale/models.hpp"

namespace polyscale {

/// Rectangular quadrature over the standard normal prior.
struct QuadratureGrid {
    std::vector<double> nodes;    // strictly increasing, logits
    std::vector<double> weights;  // prior masses summing to 1

    void validate() const;
};

/// Equally spaced nodes on [-bound, bound] with normal-density weights
/// renormalized to sum to one. Requires n_points >= 11 and bound > 0.
QuadratureGrid make_grid(std::size_t n_points = 61, double bound = 6.0);

struct EmOptions {
    double tol_ll = 1e-5;
    int max_iter = 500;
    std::size_t threads = 1;
};

struct FitResult {
    ModelKind model = ModelKind::grm;
    ItemBank bank;
    double loglik = 0;
    std::size_t n_params = 0;
    std::size_t n_persons = 0;
    double aic = 0;
    double bic = 0;
    int iterations = 0;
    bool converged = false;
    /// Marginal log-likelihood at the start of every E-step.
    std::vector<double> ll_trace;
    std::vector<std::string> warnings;
};

/// Marginal maximum likelihood by Bock-Aitkin EM with a fixed N(0, 1)
/// population on `grid`. Categories never observed for an item are dropped
/// from its layout (with a warning). Throws DataError for items with fewer
/// than two observed categories.
FitResult fit_em(const ResponseMatrix& m, ModelKind model, const QuadratureGrid& grid, const EmOptions& opts = {});

/// sum_n log sum_q w_q L_n(theta_q) for the persons of `m` under `bank`.
double marginal_loglik(const ItemBank& bank, const ResponseMatrix& m, const QuadratureGrid& grid,
                       std::size_t threads = 1);

/// Category positions of every person's responses within the bank's layout,
/// row-major persons × bank items. Throws DataError when an item is absent
/// from `m` or a response code is not in the item's parameter layout.
std::vector<std::optional<std::size_t>> align_responses(const ItemBank& bank, const ResponseMatrix& m);

struct MapSettings {
    /// Search interval [-bound, bound].
    double bound = 7.0;
    double scan_step = 0.05;
    double tol = 1e-6;
    double prior_mean = 0.0;
    double prior_sd = 1.0;
};

struct PersonScore {
    double theta = 0;
    /// 1 / sqrt(-d2 log posterior) at the mode.
    double se = 0;
    std::size_t n_observed = 0;
    bool multimodal = false;
};

/// Modal a posteriori estimate under a normal prior. Every local mode on
/// the search interval is located by derivative bracketing and bisection;
/// among equally high modes the one with smaller |theta| wins.
PersonScore map_score(const ItemBank& bank, ResponseVector responses, const MapSettings& settings = {});

std::vector<PersonScore> score_persons(const ItemBank& bank, const ResponseMatrix& m,
                                       const MapSettings& settings = {}, std::size_t threads = 1);

/// Odds relative to the scale centre: p / (1 - p) with p = logistic(theta), i.e. e^theta.
double odds(double theta);
double odds_ratio(double theta_a, double theta_b);

}  // namespace polyscale
