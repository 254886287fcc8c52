#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "polyscale/ingest.hpp"

namespace polyscale {

struct GroupSummary {
    std::string group;
    std::size_t n_unweighted = 0;
    double n_weighted = 0;  // W = sum of weights
    double mean = 0;
    double se = 0;
    double ci_lo = 0;
    double ci_hi = 0;
    /// W <= 1 (or effective N <= 1 with the Kish option): SE and CI are NaN.
    bool suppressed = false;
};

struct SummaryOptions {
    /// Use Kish's effective N = W^2 / sum(w^2) in the SE instead of W.
    bool kish_effective_n = false;
    double z = 1.96;
};

/// Weighted mean, variance sum w (x - mean)^2 / (W - 1), SE = sqrt(var / W) and
/// mean +/- z SE. Persons lacking a score or a label are skipped. Groups are
/// sorted by label.
std::vector<GroupSummary> weighted_summary(std::span<const std::optional<double>> scores,
                                           std::span<const double> weights,
                                           std::span<const std::optional<std::string>> labels,
                                           const SummaryOptions& opts = {});

/// One summary over every scored person, labelled "(overall)".
GroupSummary overall_summary(std::span<const std::optional<double>> scores, std::span<const double> weights,
                             const SummaryOptions& opts = {});

/// Unweighted person counts per (group label, category), plus a MISSING
/// column. Persons without a label fall in a "(missing)" row. Labels in
/// `declared_groups` get a row even when empty.
struct CrossTab {
    std::string group_var;
    std::string item;
    std::vector<std::string> row_labels;
    std::vector<int> categories;
    /// rows × (categories.size() + 1); the last column counts MISSING.
    std::vector<std::vector<std::size_t>> counts;

    std::size_t total() const;
    std::size_t count(const std::string& label, int category) const;
};

CrossTab crosstab(const ResponseMatrix& m, const std::string& group_var, const std::string& item,
                  const std::vector<std::string>& declared_groups = {});
void write_crosstab_csv(std::ostream& out, const CrossTab& t);

struct SignificanceFlags {
    /// Per summary: the 95% CI excludes the overall mean.
    std::vector<bool> excludes_overall;
    /// Index pairs (i < j) whose CIs are disjoint.
    std::vector<std::pair<std::size_t, std::size_t>> disjoint_pairs;
};

SignificanceFlags nonoverlap_flags(std::span<const GroupSummary> summaries, double overall_mean);

/// Rows of the summary CSV for one score column and one grouping variable.
struct SummaryTable {
    std::string score;
    std::string group_var;
    GroupSummary overall;
    std::vector<GroupSummary> groups;
    SignificanceFlags flags;
};

SummaryTable summarize_groups(const std::string& score_name, std::span<const std::optional<double>> scores,
                              std::span<const double> weights, const GroupColumn& groups,
                              const SummaryOptions& opts = {});

/// group_var,group,n_unweighted,n_weighted,mean,se,ci_lo,ci_hi,flag (with a
/// leading score column).
void write_summary_csv(std::ostream& out, std::span<const SummaryTable> tables);
/// One row per (score variant, group): figure-ready means and intervals.
void write_plot_data_csv(std::ostream& out, std::span<const SummaryTable> tables);

}  // namespace polyscale
