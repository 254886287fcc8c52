#include "polyscale/compare.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>

#include "polyscale/csv.hpp"
#include "polyscale/error.hpp"

namespace polyscale {

InformationCriteria information_criteria(double loglik, std::size_t k, std::size_t n) {
    const double kk = static_cast<double>(k);
    return {2.0 * kk - 2.0 * loglik, kk * std::log(static_cast<double>(n)) - 2.0 * loglik};
}

std::size_t free_param_count(ModelKind model, std::span<const std::size_t> category_counts) {
    std::size_t k = 0;
    for (auto m : category_counts) {
        if (m < 2) throw DataError("an item needs at least two categories");
        switch (model) {
            case ModelKind::grm: k += 1 + (m - 1); break;
            case ModelKind::ggum: k += 2 + (m - 1); break;
            case ModelKind::nrm: k += 2 * (m - 1); break;
        }
    }
    return k;
}

std::size_t free_param_count(const ItemBank& bank) {
    std::vector<std::size_t> counts;
    for (const auto& it : bank.items) counts.push_back(it.categories.size());
    return free_param_count(bank.model, counts);
}

std::string_view to_string(Verdict v) {
    return v == Verdict::distinct ? "distinct" : "equivalent-support";
}

DeltaVerdict delta_verdict(double metric_a, double metric_b, double threshold) {
    DeltaVerdict out;
    out.delta = std::abs(metric_a - metric_b);
    out.verdict = out.delta > threshold ? Verdict::distinct : Verdict::equivalent_support;
    return out;
}

std::vector<ComparisonRow> compare_models(std::span<const ModelMetrics> metrics, double threshold) {
    if (metrics.empty()) return {};
    double best_aic = metrics[0].aic, best_bic = metrics[0].bic;
    for (const auto& m : metrics) {
        best_aic = std::min(best_aic, m.aic);
        best_bic = std::min(best_bic, m.bic);
    }
    std::vector<ComparisonRow> rows;
    for (const auto& m : metrics) {
        ComparisonRow r;
        r.model = m.model;
        r.aic = m.aic;
        r.bic = m.bic;
        r.delta_aic = m.aic - best_aic;
        r.delta_bic = m.bic - best_bic;
        r.verdict = delta_verdict(m.aic, best_aic, threshold).verdict;
        rows.push_back(r);
    }
    std::stable_sort(rows.begin(), rows.end(), [](const auto& x, const auto& y) { return x.aic < y.aic; });
    return rows;
}

std::vector<CodingDeltaRow> compare_codings(std::span<const ModelMetrics> a, std::span<const ModelMetrics> b,
                                            double threshold) {
    std::map<std::string, const ModelMetrics*> bm;
    for (const auto& m : b) bm[m.model] = &m;
    if (a.size() != b.size() || bm.size() != b.size()) throw DataError("metrics files cover different model sets");
    std::vector<CodingDeltaRow> rows;
    for (const auto& ma : a) {
        auto it = bm.find(ma.model);
        if (it == bm.end()) throw DataError("model '" + ma.model + "' missing from the second metrics file");
        const auto& mb = *it->second;
        CodingDeltaRow r;
        r.model = ma.model;
        r.aic_a = ma.aic;
        r.aic_b = mb.aic;
        r.bic_a = ma.bic;
        r.bic_b = mb.bic;
        auto da = delta_verdict(ma.aic, mb.aic, threshold);
        auto db = delta_verdict(ma.bic, mb.bic, threshold);
        r.delta_aic = da.delta;
        r.delta_bic = db.delta;
        r.verdict_aic = da.verdict;
        r.verdict_bic = db.verdict;
        rows.push_back(r);
    }
    return rows;
}

namespace {

double to_real(const std::string& s, const std::string& what) {
    try {
        std::size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw DataError("metrics file: bad " + what + " value '" + s + "'");
    }
}

}  // namespace

std::vector<ModelMetrics> read_metrics_csv(std::istream& in) {
    std::string line;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        header = csv::split_record(line);
        break;
    }
    if (header.empty()) throw DataError("metrics file has no header");
    std::map<std::string, std::size_t> col;
    for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
    for (const char* req : {"model", "aic", "bic"})
        if (!col.count(req)) throw DataError(std::string("metrics file lacks column '") + req + "'");

    std::vector<ModelMetrics> out;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        auto f = csv::split_record(line);
        if (f.size() != header.size()) throw DataError("metrics file: malformed row '" + line + "'");
        ModelMetrics m;
        m.model = f[col["model"]];
        m.aic = to_real(f[col["aic"]], "aic");
        m.bic = to_real(f[col["bic"]], "bic");
        if (col.count("loglik")) m.loglik = to_real(f[col["loglik"]], "loglik");
        if (col.count("n_params")) m.n_params = static_cast<std::size_t>(to_real(f[col["n_params"]], "n_params"));
        if (col.count("n_persons"))
            m.n_persons = static_cast<std::size_t>(to_real(f[col["n_persons"]], "n_persons"));
        if (col.count("iterations")) m.iterations = static_cast<int>(to_real(f[col["iterations"]], "iterations"));
        if (col.count("converged")) m.converged = f[col["converged"]] == "true" || f[col["converged"]] == "1";
        out.push_back(m);
    }
    return out;
}

std::vector<ModelMetrics> read_metrics_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open metrics file " + path.string());
    return read_metrics_csv(in);
}

void write_metrics_csv(std::ostream& out, std::span<const ModelMetrics> metrics) {
    csv::write_record(out, {"model", "loglik", "n_params", "n_persons", "aic", "bic", "iterations", "converged"});
    for (const auto& m : metrics) {
        csv::write_record(out, {m.model, csv::format_double(m.loglik), std::to_string(m.n_params),
                                std::to_string(m.n_persons), csv::format_double(m.aic), csv::format_double(m.bic),
                                std::to_string(m.iterations), m.converged ? "true" : "false"});
    }
}

void write_comparison_csv(std::ostream& out, std::span<const ComparisonRow> rows) {
    csv::write_record(out, {"model", "aic", "bic", "delta_aic_vs_best", "delta_bic_vs_best", "verdict"});
    for (const auto& r : rows) {
        csv::write_record(out, {r.model, csv::format_fixed(r.aic, 2), csv::format_fixed(r.bic, 2),
                                csv::format_fixed(r.delta_aic, 2), csv::format_fixed(r.delta_bic, 2),
                                std::string(to_string(r.verdict))});
    }
}

void write_coding_delta_csv(std::ostream& out, std::span<const CodingDeltaRow> rows) {
    csv::write_record(out, {"model", "aic_a", "aic_b", "delta_aic", "bic_a", "bic_b", "delta_bic", "verdict_aic",
                            "verdict_bic"});
    for (const auto& r : rows) {
        csv::write_record(out, {r.model, csv::format_fixed(r.aic_a, 2), csv::format_fixed(r.aic_b, 2),
                                csv::format_fixed(r.delta_aic, 2), csv::format_fixed(r.bic_a, 2),
                                csv::format_fixed(r.bic_b, 2), csv::format_fixed(r.delta_bic, 2),
                                std::string(to_string(r.verdict_aic)), std::string(to_string(r.verdict_bic))});
    }
}

}  // namespace polyscale
