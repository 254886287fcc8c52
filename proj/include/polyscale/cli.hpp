#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "polyscale/analytics.hpp"
#include "polyscale/compare.hpp"
#include "polyscale/estimate.hpp"
#include "polyscale/ingest.hpp"
#include "polyscale/models.hpp"

namespace polyscale::cli {

/// Process exit codes.
enum ExitCode : int {
    exit_ok = 0,
    exit_internal = 1,
    exit_config = 2,
    exit_data = 3,
    exit_convergence = 4,
};

inline constexpr std::uint64_t default_seed = 20120201;

struct RunConfig {
    std::vector<std::filesystem::path> inputs;
    std::optional<std::filesystem::path> scheme;
    std::vector<std::string> items;
    /// Items used by the all-missing exclusion rule; empty means every item.
    std::vector<std::string> require;
    std::optional<std::string> id_column;
    std::optional<std::string> weight;
    std::vector<std::string> groups;
    std::vector<ModelKind> models;
    std::size_t grid_points = 61;
    double grid_bound = 6.0;
    double tol = 1e-5;
    int max_iter = 500;
    std::uint64_t seed = default_seed;
    bool seed_given = false;
    std::size_t threads = 1;
    std::filesystem::path out = ".";

    std::vector<std::filesystem::path> params;  // score
    bool classical = false;                     // score
    std::vector<std::string> score_columns;     // summarize
    bool kish = false;                          // summarize
    double threshold = default_delta_threshold;  // compare
    std::optional<std::filesystem::path> spec;  // simulate
    std::string crosstab_item;                  // crosstab

    /// Stable text form used for the config hash in output headers.
    std::string canonical() const;
};

struct RecodeResult {
    std::size_t n_in = 0;
    std::size_t n_out = 0;
    std::vector<std::string> excluded_ids;
    std::filesystem::path recoded_csv;
    std::filesystem::path exclusion_report;
};

struct FitCommandResult {
    std::vector<FitResult> fits;
    std::vector<std::filesystem::path> param_files;
    std::filesystem::path metrics_csv;
    std::filesystem::path comparison_csv;
    bool all_converged = true;
};

struct ScoreResult {
    std::filesystem::path scores_csv;
    std::size_t persons = 0;
};

struct CompareResult {
    std::vector<CodingDeltaRow> rows;
    std::filesystem::path delta_csv;
};

struct SummarizeResult {
    std::vector<SummaryTable> tables;
    std::filesystem::path summary_csv;
    std::filesystem::path plot_csv;
};

/// Loads inputs[0]; with a scheme the raw codes are recoded, otherwise the
/// codes are taken as already recoded and category lists come from the data.
ResponseMatrix load_responses(const RunConfig& config);

RecodeResult cmd_recode(const RunConfig& config);
FitCommandResult cmd_fit(const RunConfig& config);
ScoreResult cmd_score(const RunConfig& config);
/// inputs[0] and inputs[1] are the two metrics files.
CompareResult cmd_compare(const RunConfig& config);
/// inputs[0] is a scores CSV.
SummarizeResult cmd_summarize(const RunConfig& config);
std::filesystem::path cmd_simulate(const RunConfig& config);
std::filesystem::path cmd_crosstab(const RunConfig& config);

/// Parses argv and runs a subcommand; returns an ExitCode.
int run(int argc, char** argv);

}  // namespace polyscale::cli
