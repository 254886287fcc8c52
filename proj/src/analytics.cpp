#include "polyscale/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <ostream>

#include "polyscale/csv.hpp"
#include "polyscale/error.hpp"

namespace polyscale {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct Accumulator {
    std::vector<double> x, w;
};

GroupSummary summarize(const std::string& label, const Accumulator& acc, const SummaryOptions& opts) {
    GroupSummary s;
    s.group = label;
    s.n_unweighted = acc.x.size();
    double W = 0, sx = 0, sw2 = 0;
    for (std::size_t j = 0; j < acc.x.size(); ++j) {
        W += acc.w[j];
        sx += acc.w[j] * acc.x[j];
        sw2 += acc.w[j] * acc.w[j];
    }
    s.n_weighted = W;
    s.mean = W > 0 ? sx / W : kNaN;
    const double n_eff = opts.kish_effective_n ? (sw2 > 0 ? W * W / sw2 : 0.0) : W;
    if (!(W > 1) || !(n_eff > 1)) {
        s.suppressed = true;
        s.se = s.ci_lo = s.ci_hi = kNaN;
        return s;
    }
    double ss = 0;
    for (std::size_t j = 0; j < acc.x.size(); ++j) ss += acc.w[j] * (acc.x[j] - s.mean) * (acc.x[j] - s.mean);
    const double var = ss / (W - 1);
    s.se = std::sqrt(var / n_eff);
    s.ci_lo = s.mean - opts.z * s.se;
    s.ci_hi = s.mean + opts.z * s.se;
    return s;
}

void check_aligned(std::size_t a, std::size_t b, std::size_t c) {
    if (a != b || (c != 0 && a != c)) throw DataError("scores, weights and labels are not aligned");
}

}  // namespace

std::vector<GroupSummary> weighted_summary(std::span<const std::optional<double>> scores,
                                           std::span<const double> weights,
                                           std::span<const std::optional<std::string>> labels,
                                           const SummaryOptions& opts) {
    check_aligned(scores.size(), weights.size(), labels.size());
    if (labels.size() != scores.size()) throw DataError("labels not aligned with scores");
    std::map<std::string, Accumulator> groups;
    for (std::size_t n = 0; n < scores.size(); ++n) {
        if (!(weights[n] > 0)) throw DataError("weights must be positive");
        if (!scores[n] || !labels[n]) continue;
        auto& acc = groups[*labels[n]];
        acc.x.push_back(*scores[n]);
        acc.w.push_back(weights[n]);
    }
    std::vector<GroupSummary> out;
    for (const auto& [label, acc] : groups) out.push_back(summarize(label, acc, opts));
    return out;
}

GroupSummary overall_summary(std::span<const std::optional<double>> scores, std::span<const double> weights,
                             const SummaryOptions& opts) {
    check_aligned(scores.size(), weights.size(), 0);
    Accumulator acc;
    for (std::size_t n = 0; n < scores.size(); ++n) {
        if (!(weights[n] > 0)) throw DataError("weights must be positive");
        if (!scores[n]) continue;
        acc.x.push_back(*scores[n]);
        acc.w.push_back(weights[n]);
    }
    return summarize("(overall)", acc, opts);
}

std::size_t CrossTab::total() const {
    std::size_t t = 0;
    for (const auto& row : counts)
        for (auto c : row) t += c;
    return t;
}

std::size_t CrossTab::count(const std::string& label, int category) const {
    auto r = std::find(row_labels.begin(), row_labels.end(), label);
    auto c = std::find(categories.begin(), categories.end(), category);
    if (r == row_labels.end() || c == categories.end()) return 0;
    return counts[static_cast<std::size_t>(r - row_labels.begin())][static_cast<std::size_t>(c - categories.begin())];
}

CrossTab crosstab(const ResponseMatrix& m, const std::string& group_var, const std::string& item,
                  const std::vector<std::string>& declared_groups) {
    const auto& g = m.group(group_var);
    const std::size_t i = m.item_index(item);
    CrossTab t;
    t.group_var = group_var;
    t.item = item;
    t.categories = m.items[i].categories;
    std::map<std::string, std::vector<std::size_t>> rows;
    const std::size_t width = t.categories.size() + 1;
    for (const auto& label : declared_groups) rows[label].assign(width, 0);
    bool any_missing_label = false;
    std::vector<std::size_t> missing_row(width, 0);
    for (std::size_t n = 0; n < m.persons(); ++n) {
        auto k = m.category_index(n, i);
        std::size_t col = k ? *k : width - 1;
        if (!g.labels[n]) {
            any_missing_label = true;
            ++missing_row[col];
            continue;
        }
        auto& row = rows[*g.labels[n]];
        if (row.empty()) row.assign(width, 0);
        ++row[col];
    }
    for (auto& [label, row] : rows) {
        t.row_labels.push_back(label);
        t.counts.push_back(row);
    }
    if (any_missing_label) {
        t.row_labels.push_back("(missing)");
        t.counts.push_back(missing_row);
    }
    return t;
}

void write_crosstab_csv(std::ostream& out, const CrossTab& t) {
    std::vector<std::string> row{t.group_var};
    for (int c : t.categories) row.push_back(t.item + "=" + std::to_string(c));
    row.push_back(t.item + "=MISSING");
    row.push_back("total");
    csv::write_record(out, row);
    for (std::size_t r = 0; r < t.row_labels.size(); ++r) {
        row.assign(1, t.row_labels[r]);
        std::size_t tot = 0;
        for (auto c : t.counts[r]) {
            row.push_back(std::to_string(c));
            tot += c;
        }
        row.push_back(std::to_string(tot));
        csv::write_record(out, row);
    }
}

SignificanceFlags nonoverlap_flags(std::span<const GroupSummary> summaries, double overall_mean) {
    SignificanceFlags f;
    for (const auto& s : summaries)
        f.excludes_overall.push_back(!s.suppressed && (overall_mean < s.ci_lo || overall_mean > s.ci_hi));
    for (std::size_t i = 0; i < summaries.size(); ++i) {
        for (std::size_t j = i + 1; j < summaries.size(); ++j) {
            const auto& a = summaries[i];
            const auto& b = summaries[j];
            if (a.suppressed || b.suppressed) continue;
            if (a.ci_hi < b.ci_lo || b.ci_hi < a.ci_lo) f.disjoint_pairs.emplace_back(i, j);
        }
    }
    return f;
}

SummaryTable summarize_groups(const std::string& score_name, std::span<const std::optional<double>> scores,
                              std::span<const double> weights, const GroupColumn& groups,
                              const SummaryOptions& opts) {
    SummaryTable t;
    t.score = score_name;
    t.group_var = groups.name;
    t.overall = overall_summary(scores, weights, opts);
    t.groups = weighted_summary(scores, weights, groups.labels, opts);
    t.flags = nonoverlap_flags(t.groups, t.overall.mean);
    return t;
}

namespace {

std::vector<std::string> summary_fields(const std::string& score, const std::string& group_var,
                                        const GroupSummary& s, const std::string& flag) {
    return {score,
            group_var,
            s.group,
            std::to_string(s.n_unweighted),
            csv::format_double(s.n_weighted),
            csv::format_double(s.mean),
            csv::format_double(s.se),
            csv::format_double(s.ci_lo),
            csv::format_double(s.ci_hi),
            flag};
}

std::string flag_text(const SummaryTable& t, std::size_t g) {
    if (t.groups[g].suppressed) return "suppressed";
    return t.flags.excludes_overall[g] ? "excludes_overall" : "";
}

}  // namespace

void write_summary_csv(std::ostream& out, std::span<const SummaryTable> tables) {
    csv::write_record(out, {"score", "group_var", "group", "n_unweighted", "n_weighted", "mean", "se", "ci_lo",
                            "ci_hi", "flag"});
    for (const auto& t : tables) {
        for (std::size_t g = 0; g < t.groups.size(); ++g)
            csv::write_record(out, summary_fields(t.score, t.group_var, t.groups[g], flag_text(t, g)));
        csv::write_record(out, summary_fields(t.score, t.group_var, t.overall, t.overall.suppressed ? "suppressed" : ""));
    }
}

void write_plot_data_csv(std::ostream& out, std::span<const SummaryTable> tables) {
    csv::write_record(out, {"group_var", "group", "score", "mean", "ci_lo", "ci_hi", "overall_mean",
                            "excludes_overall", "disjoint_from"});
    for (const auto& t : tables) {
        for (std::size_t g = 0; g < t.groups.size(); ++g) {
            std::string disjoint;
            for (auto [a, b] : t.flags.disjoint_pairs) {
                if (a != g && b != g) continue;
                if (!disjoint.empty()) disjoint += ';';
                disjoint += t.groups[a == g ? b : a].group;
            }
            const auto& s = t.groups[g];
            csv::write_record(out, {t.group_var, s.group, t.score, csv::format_double(s.mean),
                                    csv::format_double(s.ci_lo), csv::format_double(s.ci_hi),
                                    csv::format_double(t.overall.mean),
                                    t.flags.excludes_overall[g] ? "true" : "false", disjoint});
        }
    }
}

}  // namespace polyscale
