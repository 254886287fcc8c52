#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "polyscale/models.hpp"

namespace polyscale {

struct InformationCriteria {
    double aic = 0;
    double bic = 0;
};

/// AIC = 2k - 2LL; BIC = k ln(n) - 2LL, with n the number of persons.
InformationCriteria information_criteria(double loglik, std::size_t k, std::size_t n);

/// Free parameters for a layout of per-item category counts:
/// GRM 1 + (m - 1), GGUM 2 + C, NRM 2 (m - 1) per item.
std::size_t free_param_count(ModelKind model, std::span<const std::size_t> category_counts);
std::size_t free_param_count(const ItemBank& bank);

enum class Verdict { equivalent_support, distinct };
std::string_view to_string(Verdict v);

inline constexpr double default_delta_threshold = 10.0;

struct DeltaVerdict {
    double delta = 0;  // |a - b|
    Verdict verdict = Verdict::equivalent_support;
};

/// Distinct iff |a - b| > threshold.
DeltaVerdict delta_verdict(double metric_a, double metric_b, double threshold = default_delta_threshold);

/// One line of a fit-metrics file.
struct ModelMetrics {
    std::string model;
    double loglik = 0;
    std::size_t n_params = 0;
    std::size_t n_persons = 0;
    double aic = 0;
    double bic = 0;
    int iterations = 0;
    bool converged = true;
};

struct ComparisonRow {
    std::string model;
    double aic = 0;
    double bic = 0;
    double delta_aic = 0;  // vs best AIC
    double delta_bic = 0;  // vs best BIC
    Verdict verdict = Verdict::equivalent_support;
};

/// Ranks models by AIC (ascending). Verdict is "distinct" when the model's
/// AIC differs from the best by more than the threshold.
std::vector<ComparisonRow> compare_models(std::span<const ModelMetrics> metrics,
                                          double threshold = default_delta_threshold);

/// Same models fitted under two codings (Table-6 style).
struct CodingDeltaRow {
    std::string model;
    double aic_a = 0, aic_b = 0, delta_aic = 0;
    double bic_a = 0, bic_b = 0, delta_bic = 0;
    Verdict verdict_aic = Verdict::equivalent_support;
    Verdict verdict_bic = Verdict::equivalent_support;
};

/// Throws DataError when the two files do not cover the same models.
std::vector<CodingDeltaRow> compare_codings(std::span<const ModelMetrics> a, std::span<const ModelMetrics> b,
                                            double threshold = default_delta_threshold);

/// Metrics CSV: model,loglik,n_params,n_persons,aic,bic,iterations,converged.
/// Leading '#' lines are ignored; only model, aic and bic are required.
std::vector<ModelMetrics> read_metrics_csv(std::istream& in);
std::vector<ModelMetrics> read_metrics_csv(const std::filesystem::path& path);
void write_metrics_csv(std::ostream& out, std::span<const ModelMetrics> metrics);

void write_comparison_csv(std::ostream& out, std::span<const ComparisonRow> rows);
void write_coding_delta_csv(std::ostream& out, std::span<const CodingDeltaRow> rows);

}  // namespace polyscale
