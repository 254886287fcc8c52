#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace polyscale {

enum class ModelKind { grm, ggum, nrm };

std::string_view to_string(ModelKind kind);
/// Accepts "grm", "ggum", "nrm" (case-insensitive); throws ConfigError otherwise.
ModelKind parse_model_kind(std::string_view name);

/// Graded response model item: P(X >= category x+1) = logistic(a (theta - d[x])).
struct GrmItemParams {
    double a = 1.0;
    std::vector<double> d;  // m - 1 strictly increasing boundary locations

    std::size_t categories() const { return d.size() + 1; }
    void validate() const;
};

/// Generalized graded unfolding model item with C + 1 observable categories
/// and M = 2C + 1 subjective ones. Only tau_1..tau_C are stored; tau_0 = 0,
/// tau_{C+1} = 0 and tau_z = -tau_{M-z+1} hold by construction.
struct GgumItemParams {
    double a = 1.0;
    double d = 0.0;
    std::vector<double> tau;

    std::size_t categories() const { return tau.size() + 1; }
    void validate() const;
};

/// Nominal response model item in slope/intercept form:
/// logit_k = a_k theta + c_k, equivalently a_k (theta - d_k) with c_k = -a_k d_k.
struct NrmItemParams {
    std::vector<double> a;
    std::vector<double> c;

    static NrmItemParams from_locations(std::span<const double> slopes, std::span<const double> locations);

    std::size_t categories() const { return a.size(); }
    /// d_k = -c_k / a_k; infinite or NaN when a_k == 0.
    double location(std::size_t k) const;
    /// True when sum(a) and sum(c) vanish (within `tol` times the scale).
    bool identified(double tol = 1e-12) const;
    /// Softmax-equivalent copy with sum(a) = sum(c) = 0.
    NrmItemParams centered() const;
    void validate() const;
};

using ItemParams = std::variant<GrmItemParams, GgumItemParams, NrmItemParams>;
using CategoryDistribution = std::vector<double>;

ModelKind model_of(const ItemParams& p);
std::size_t category_count(const ItemParams& p);
void validate(const ItemParams& p);

/// Number of natural parameters, in the layout used by log_probs_with_jacobian:
/// GRM (a, d_1..d_{m-1}); GGUM (a, d, tau_1..tau_C); NRM (a_1..a_m, c_1..c_m).
std::size_t natural_param_count(const ItemParams& p);

/// Cumulative probability for 1-based boundary x in 1..m+1. x = 1 gives 1 and
/// x = m + 1 gives 0.
double grm_cumulative(const GrmItemParams& p, double theta, std::size_t x);

CategoryDistribution grm_category_probs(const GrmItemParams& p, double theta);
CategoryDistribution ggum_category_probs(const GgumItemParams& p, double theta);
CategoryDistribution nrm_category_probs(const NrmItemParams& p, double theta);
CategoryDistribution category_probs(const ItemParams& p, double theta);

/// log P(category k | theta) for every k. `out.size()` must equal the category count.
void log_category_probs(const ItemParams& p, double theta, std::span<double> out);

/// Log-probabilities plus their partial derivatives with respect to the
/// natural parameters; `jac` is row-major categories × natural_param_count.
void log_probs_with_jacobian(const ItemParams& p, double theta, std::span<double> logp, std::span<double> jac);

/// d/dtheta log P(category k | theta).
double dlog_prob_dtheta(const ItemParams& p, double theta, std::size_t k);

/// An item with its category codes (ascending) and parameters.
struct CalibratedItem {
    std::string id;
    std::vector<int> categories;
    ItemParams params;
};

/// The item-parameter matrix for one model.
struct ItemBank {
    ModelKind model = ModelKind::grm;
    std::vector<CalibratedItem> items;

    void validate() const;
};

/// Responses given as category positions; std::nullopt is MISSING and contributes 0.
using ResponseVector = std::span<const std::optional<std::size_t>>;

double person_loglik(const ItemBank& bank, ResponseVector responses, double theta);
/// d/dtheta of person_loglik.
double person_loglik_dtheta(const ItemBank& bank, ResponseVector responses, double theta);

namespace detail {
double log_sum_exp(std::span<const double> xs);
double log_sigmoid(double x);
double sigmoid(double x);
}  // namespace detail

}  // namespace polyscale
