#pragma once

#include <optional>
#include <string>
#include <vector>

#include "polyscale/ingest.hpp"

namespace polyscale {

/// Classical standardized composites. Persons without any observed item in
/// the selection have no score (std::nullopt). Both passes use the sample
/// SD (N - 1 denominator) and the recoded category values.
struct ClassicalScores {
    std::vector<std::optional<double>> z_score_b;
    std::vector<std::optional<double>> z_score_w;
    double composite_mean = 0;  // mu_N
    double composite_sd = 0;    // sigma_N
    std::vector<double> item_means;  // mu_Ni
    std::vector<double> item_sds;    // sigma_Ni
};

/// Sum over observed items, then standardize across scored persons.
std::vector<std::optional<double>> z_score_b(const ResponseMatrix& m, const std::vector<std::string>& items);

/// Standardize each item over its observed responses, then average over the
/// person's observed items. Not re-standardized afterwards.
std::vector<std::optional<double>> z_score_w(const ResponseMatrix& m, const std::vector<std::string>& items);

ClassicalScores classical_scores(const ResponseMatrix& m, const std::vector<std::string>& items);

}  // namespace polyscale
