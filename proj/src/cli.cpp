#include "polyscale/cli.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>

#include "polyscale/classical.hpp"
#include "polyscale/csv.hpp"
#include "polyscale/error.hpp"
#include "polyscale/param_io.hpp"
#include "polyscale/provenance.hpp"
#include "polyscale/simulate.hpp"

namespace polyscale::cli {

namespace fs = std::filesystem;

namespace {

std::string join(const std::vector<std::string>& xs, char sep = ',') {
    std::string out;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i) out += sep;
        out += xs[i];
    }
    return out;
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw ConfigError("cannot open " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::ofstream open_out(const fs::path& p) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + p.string());
    return out;
}

void ensure_out_dir(const RunConfig& c) {
    std::error_code ec;
    fs::create_directories(c.out, ec);
    if (ec || !fs::is_directory(c.out)) throw ConfigError("cannot create output directory " + c.out.string());
}

const fs::path& input_at(const RunConfig& c, std::size_t k, const char* what) {
    if (c.inputs.size() <= k) throw ConfigError(std::string("missing ") + what);
    if (!fs::exists(c.inputs[k])) throw ConfigError("input file not found: " + c.inputs[k].string());
    return c.inputs[k];
}

Provenance provenance(const std::string& command, const RunConfig& c) {
    Provenance p;
    p.command = command;
    p.add("config_hash", hex64(fnv1a64(c.canonical())));
    p.add("seed", std::to_string(c.seed));
    for (const auto& in : c.inputs) p.add("input " + in.filename().string(), file_checksum(in));
    if (c.scheme) p.add("scheme " + c.scheme->filename().string(), file_checksum(*c.scheme));
    for (const auto& pf : c.params) p.add("params " + pf.filename().string(), file_checksum(pf));
    return p;
}

// Columns of a CSV that are neither id, weight nor group columns.
std::vector<std::string> default_items(const std::string& text, const RunConfig& c) {
    std::istringstream in(text);
    auto raw = parse_csv(in, ColumnSpec{}, "header");
    std::vector<std::string> items;
    for (const auto& h : raw.header) {
        if (c.id_column && h == *c.id_column) continue;
        if (c.weight && h == *c.weight) continue;
        if (std::find(c.groups.begin(), c.groups.end(), h) != c.groups.end()) continue;
        items.push_back(h);
    }
    return items;
}

}  // namespace

std::string RunConfig::canonical() const {
    std::ostringstream os;
    os << "scheme=" << (scheme ? scheme->filename().string() : "") << ";items=" << join(items)
       << ";require=" << join(require) << ";id=" << id_column.value_or("") << ";weight=" << weight.value_or("")
       << ";groups=" << join(groups) << ";models=";
    for (auto m : models) os << to_string(m) << ' ';
    os << ";grid=" << grid_points << '/' << csv::format_double(grid_bound) << ";tol=" << csv::format_double(tol)
       << ";max_iter=" << max_iter << ";seed=" << seed << ";classical=" << classical
       << ";scores=" << join(score_columns) << ";kish=" << kish << ";threshold=" << csv::format_double(threshold)
       << ";item=" << crosstab_item;
    return os.str();
}

ResponseMatrix load_responses(const RunConfig& c) {
    const auto& path = input_at(c, 0, "--input");
    const std::string text = read_file(path);
    ColumnSpec spec{c.id_column, c.items, c.weight, c.groups};
    if (c.scheme) {
        auto scheme = CodingScheme::load(*c.scheme);
        if (spec.item_columns.empty())
            for (const auto& it : scheme.items) spec.item_columns.push_back(it.item);
        std::istringstream in(text);
        auto raw = parse_csv(in, spec, path.string());
        return apply_coding(raw, scheme, spec);
    }
    if (spec.item_columns.empty()) spec.item_columns = default_items(text, c);
    if (spec.item_columns.empty()) throw ConfigError("no item columns selected");
    std::istringstream in(text);
    auto raw = parse_csv(in, spec, path.string());
    return apply_coding(raw, CodingScheme::identity_from(raw, spec.item_columns), spec);
}

RecodeResult cmd_recode(const RunConfig& c) {
    if (!c.scheme) throw ConfigError("recode needs --scheme");
    ensure_out_dir(c);
    auto m = load_responses(c);
    std::vector<std::string> required = c.require;
    if (required.empty())
        for (const auto& it : m.items) required.push_back(it.id);
    auto ex = exclude_all_missing(m, required);

    RecodeResult res;
    res.n_in = m.persons();
    res.n_out = ex.kept.persons();
    for (auto r : ex.excluded_rows) res.excluded_ids.push_back(m.person_ids[r]);

    auto p = provenance("recode", c);
    p.add("persons_in", std::to_string(res.n_in));
    p.add("persons_out", std::to_string(res.n_out));
    res.recoded_csv = c.out / "recoded.csv";
    {
        auto out = open_out(res.recoded_csv);
        p.write(out);
        write_response_csv(out, ex.kept, c.id_column.value_or("id"), c.weight.value_or("weight"));
    }
    res.exclusion_report = c.out / "exclusions.csv";
    {
        auto out = open_out(res.exclusion_report);
        p.write(out);
        out << "# excluded: " << res.excluded_ids.size() << "\n";
        csv::write_record(out, {"id", "reason"});
        const std::string reason = "missing all of " + join(required, ' ');
        for (const auto& id : res.excluded_ids) csv::write_record(out, {id, reason});
    }
    return res;
}

FitCommandResult cmd_fit(const RunConfig& c) {
    if (c.models.empty()) throw ConfigError("fit needs at least one model (--models)");
    ensure_out_dir(c);
    auto m = load_responses(c);
    auto grid = make_grid(c.grid_points, c.grid_bound);
    EmOptions opts;
    opts.tol_ll = c.tol;
    opts.max_iter = c.max_iter;
    opts.threads = c.threads;

    FitCommandResult res;
    std::vector<ModelMetrics> metrics;
    std::vector<std::string> notes;
    for (auto model : c.models) {
        auto fit = fit_em(m, model, grid, opts);
        for (const auto& w : fit.warnings) {
            std::cerr << "warning: " << w << "\n";
            notes.push_back(std::string(to_string(model)) + ": " + w);
        }
        auto pf = c.out / ("params_" + std::string(to_string(model)) + ".json");
        save_params(pf, fit.bank);
        res.param_files.push_back(pf);
        res.all_converged = res.all_converged && fit.converged;
        metrics.push_back(ModelMetrics{std::string(to_string(model)), fit.loglik, fit.n_params, fit.n_persons,
                                       fit.aic, fit.bic, fit.iterations, fit.converged});
        res.fits.push_back(std::move(fit));
    }

    auto p = provenance("fit", c);
    res.metrics_csv = c.out / "fit_metrics.csv";
    {
        auto out = open_out(res.metrics_csv);
        p.write(out);
        for (const auto& n : notes) out << "# warning: " << n << "\n";
        write_metrics_csv(out, metrics);
    }
    res.comparison_csv = c.out / "model_comparison.csv";
    {
        auto out = open_out(res.comparison_csv);
        p.write(out);
        write_comparison_csv(out, compare_models(metrics, c.threshold));
    }
    return res;
}

ScoreResult cmd_score(const RunConfig& c) {
    if (c.params.empty()) throw ConfigError("score needs at least one --params file");
    ensure_out_dir(c);
    auto m = load_responses(c);
    MapSettings settings;
    settings.bound = c.grid_bound + 1.0;

    std::vector<std::string> header{c.id_column.value_or("id"), c.weight.value_or("weight")};
    for (const auto& g : m.groups) header.push_back(g.name);
    header.push_back("n_observed");

    std::vector<std::vector<PersonScore>> scores;
    std::map<std::string, int> used;
    std::vector<std::string> item_ids;
    for (const auto& pf : c.params) {
        auto bank = load_params(pf);
        if (item_ids.empty())
            for (const auto& it : bank.items) item_ids.push_back(it.id);
        std::string name(to_string(bank.model));
        int k = used[name]++;
        if (k > 0) name += "_" + std::to_string(k + 1);
        header.push_back("theta_" + name);
        header.push_back("se_" + name);
        scores.push_back(score_persons(bank, m, settings, c.threads));
    }
    std::optional<ClassicalScores> classical;
    if (c.classical) {
        classical = classical_scores(m, item_ids);
        header.push_back("z_score_b");
        header.push_back("z_score_w");
    }
    header.push_back("flag");

    ScoreResult res;
    res.persons = m.persons();
    res.scores_csv = c.out / "scores.csv";
    auto out = open_out(res.scores_csv);
    provenance("score", c).write(out);
    csv::write_record(out, header);
    for (std::size_t n = 0; n < m.persons(); ++n) {
        std::vector<std::string> row{m.person_ids[n], csv::format_double(m.weights[n])};
        for (const auto& g : m.groups) row.push_back(g.labels[n].value_or(""));
        row.push_back(std::to_string(scores.front()[n].n_observed));
        bool multimodal = false;
        for (const auto& s : scores) {
            row.push_back(csv::format_double(s[n].theta));
            row.push_back(csv::format_double(s[n].se));
            multimodal = multimodal || s[n].multimodal;
        }
        if (classical) {
            const auto& b = classical->z_score_b[n];
            const auto& w = classical->z_score_w[n];
            row.push_back(b ? csv::format_double(*b) : "");
            row.push_back(w ? csv::format_double(*w) : "");
        }
        std::string flag;
        if (scores.front()[n].n_observed == 0)
            flag = "all_missing";
        else if (multimodal)
            flag = "multimodal";
        row.push_back(flag);
        csv::write_record(out, row);
    }
    return res;
}

CompareResult cmd_compare(const RunConfig& c) {
    ensure_out_dir(c);
    auto a = read_metrics_csv(input_at(c, 0, "first metrics file"));
    auto b = read_metrics_csv(input_at(c, 1, "second metrics file"));
    CompareResult res;
    res.rows = compare_codings(a, b, c.threshold);
    res.delta_csv = c.out / "coding_delta.csv";
    auto out = open_out(res.delta_csv);
    auto p = provenance("compare", c);
    p.add("threshold", csv::format_double(c.threshold));
    p.write(out);
    write_coding_delta_csv(out, res.rows);
    return res;
}

SummarizeResult cmd_summarize(const RunConfig& c) {
    if (c.groups.empty()) throw ConfigError("summarize needs --groups");
    ensure_out_dir(c);
    const auto& path = input_at(c, 0, "--input (scores CSV)");
    ColumnSpec spec;
    spec.id_column = c.id_column;
    spec.group_columns = c.groups;
    std::optional<std::string> weight = c.weight;
    {
        std::istringstream probe(read_file(path));
        auto head = parse_csv(probe, ColumnSpec{}, path.string());
        if (!weight && head.has_column("weight")) weight = "weight";
        for (const auto& g : c.groups)
            if (!head.has_column(g)) throw ConfigError("unknown group column '" + g + "'");
    }
    spec.weight_column = weight;
    auto raw = load_csv(path, spec);

    std::vector<std::string> columns = c.score_columns;
    if (columns.empty()) {
        for (const auto& h : raw.header)
            if (h.rfind("theta_", 0) == 0 || h.rfind("z_score_", 0) == 0) columns.push_back(h);
    }
    if (columns.empty()) throw ConfigError("no score columns to summarize");

    std::vector<double> weights(raw.n_rows, 1.0);
    if (weight) {
        const auto& col = raw.column_text(*weight);
        for (std::size_t r = 0; r < raw.n_rows; ++r) {
            if (!col[r]) throw DataError(path.string() + ": missing weight on data row " + std::to_string(r + 1));
            weights[r] = std::stod(*col[r]);
            if (!(weights[r] > 0)) throw DataError(path.string() + ": weights must be positive");
        }
    }

    SummaryOptions opts;
    opts.kish_effective_n = c.kish;
    SummarizeResult res;
    for (const auto& g : c.groups) {
        GroupColumn gc{g, raw.column_text(g)};
        for (const auto& name : columns) {
            const auto& col = raw.column_text(name);
            std::vector<std::optional<double>> scores(raw.n_rows);
            for (std::size_t r = 0; r < raw.n_rows; ++r) {
                if (!col[r]) continue;
                try {
                    scores[r] = std::stod(*col[r]);
                } catch (const std::exception&) {
                    throw DataError(path.string() + ": non-numeric score '" + *col[r] + "' in " + name);
                }
            }
            res.tables.push_back(summarize_groups(name, scores, weights, gc, opts));
        }
    }
    auto p = provenance("summarize", c);
    res.summary_csv = c.out / "group_summary.csv";
    {
        auto out = open_out(res.summary_csv);
        p.write(out);
        write_summary_csv(out, res.tables);
    }
    res.plot_csv = c.out / "plot_data.csv";
    {
        auto out = open_out(res.plot_csv);
        p.write(out);
        write_plot_data_csv(out, res.tables);
    }
    return res;
}

fs::path cmd_simulate(const RunConfig& c) {
    if (!c.spec) throw ConfigError("simulate needs --spec");
    ensure_out_dir(c);
    auto spec = load_sim_spec(*c.spec);
    if (c.seed_given) spec.seed = c.seed;
    auto sim = simulate(spec, c.threads);
    auto path = c.out / "simulated.csv";
    auto out = open_out(path);
    Provenance p;
    p.command = "simulate";
    p.add("spec " + c.spec->filename().string(), file_checksum(*c.spec));
    p.add("seed", std::to_string(spec.seed));
    p.add("rng", "xoshiro256** per person, seeded by SplitMix64(seed, person index)");
    p.write(out);
    std::vector<std::string> header{"id"};
    for (const auto& it : sim.responses.items) header.push_back(it.id);
    header.push_back("weight");
    for (const auto& g : sim.responses.groups) header.push_back(g.name);
    header.push_back("theta_true");
    csv::write_record(out, header);
    const auto& m = sim.responses;
    for (std::size_t n = 0; n < m.persons(); ++n) {
        std::vector<std::string> row{m.person_ids[n]};
        for (std::size_t i = 0; i < m.item_count(); ++i) {
            auto code = m.code(n, i);
            row.push_back(code ? std::to_string(*code) : "");
        }
        row.push_back(csv::format_double(m.weights[n]));
        for (const auto& g : m.groups) row.push_back(g.labels[n].value_or(""));
        row.push_back(csv::format_double(sim.theta[n]));
        csv::write_record(out, row);
    }
    return path;
}

fs::path cmd_crosstab(const RunConfig& c) {
    if (c.groups.empty()) throw ConfigError("crosstab needs --groups");
    if (c.crosstab_item.empty()) throw ConfigError("crosstab needs --item");
    ensure_out_dir(c);
    auto m = load_responses(c);
    auto p = provenance("crosstab", c);
    auto path = c.out / "crosstab.csv";
    auto out = open_out(path);
    p.write(out);
    for (const auto& g : c.groups) write_crosstab_csv(out, crosstab(m, g, c.crosstab_item));
    return path;
}

int run(int argc, char** argv) {
    CLI::App app{"polyscale: latent-trait scaling of categorical survey responses"};
    app.require_subcommand(1);
    RunConfig c;
    std::vector<std::string> inputs, models, params;
    std::string scheme, weight, id, spec, out = ".";

    auto common = [&](CLI::App* sub) {
        sub->add_option("--out", out, "Output directory")->capture_default_str();
        sub->add_option("--seed", c.seed, "Random seed")->capture_default_str();
        sub->add_option("--threads", c.threads, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);
    };
    auto data_flags = [&](CLI::App* sub) {
        sub->add_option("--input", inputs, "Input CSV")->required();
        sub->add_option("--scheme", scheme, "Coding scheme JSON");
        sub->add_option("--items", c.items, "Item columns")->delimiter(',');
        sub->add_option("--id", id, "Person id column");
        sub->add_option("--weight", weight, "Survey weight column");
        sub->add_option("--groups", c.groups, "Group label columns")->delimiter(',');
    };
    auto estimation_flags = [&](CLI::App* sub) {
        sub->add_option("--grid-points", c.grid_points, "Quadrature points")->capture_default_str();
        sub->add_option("--grid-bound", c.grid_bound, "Quadrature bound (logits)")->capture_default_str();
    };

    auto* recode = app.add_subcommand("recode", "Apply a coding scheme and the all-missing exclusion rule");
    data_flags(recode);
    recode->add_option("--require", c.require, "Items for the exclusion rule (default: all)")->delimiter(',');
    common(recode);

    auto* fit = app.add_subcommand("fit", "Fit item parameters by EM for one or more models");
    data_flags(fit);
    estimation_flags(fit);
    fit->add_option("--models", models, "grm, ggum, nrm")->delimiter(',')->required();
    fit->add_option("--tol", c.tol, "Marginal log-likelihood tolerance")->capture_default_str();
    fit->add_option("--max-iter", c.max_iter, "Maximum EM iterations")->capture_default_str();
    fit->add_option("--threshold", c.threshold, "Delta threshold for verdicts")->capture_default_str();
    common(fit);

    auto* score = app.add_subcommand("score", "MAP-score persons with calibrated parameters");
    data_flags(score);
    estimation_flags(score);
    score->add_option("--params", params, "Parameter file(s)")->required();
    score->add_flag("--classical", c.classical, "Add z_score_b and z_score_w columns");
    common(score);

    auto* compare = app.add_subcommand("compare", "Delta-AIC/BIC between two fit-metrics files");
    compare->add_option("--input", inputs, "Two metrics CSVs")->required()->expected(2);
    compare->add_option("--threshold", c.threshold, "Delta threshold")->capture_default_str();
    common(compare);

    auto* summarize = app.add_subcommand("summarize", "Weighted subgroup summaries of score columns");
    summarize->add_option("--input", inputs, "Scores CSV")->required();
    summarize->add_option("--id", id, "Person id column");
    summarize->add_option("--weight", weight, "Weight column (default: 'weight' when present)");
    summarize->add_option("--groups", c.groups, "Group columns")->delimiter(',')->required();
    summarize->add_option("--scores", c.score_columns, "Score columns (default: theta_* and z_score_*)")
        ->delimiter(',');
    summarize->add_flag("--kish", c.kish, "Use Kish effective N in standard errors");
    common(summarize);

    auto* simulate_cmd = app.add_subcommand("simulate", "Simulate responses from a SimSpec file");
    simulate_cmd->add_option("--spec", spec, "SimSpec JSON")->required();
    common(simulate_cmd);

    auto* cross = app.add_subcommand("crosstab", "Unweighted counts of group x category");
    data_flags(cross);
    cross->add_option("--item", c.crosstab_item, "Item column")->required();
    common(cross);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? exit_ok : exit_config;
    }

    for (const auto& s : inputs) c.inputs.emplace_back(s);
    for (const auto& s : params) c.params.emplace_back(s);
    if (!scheme.empty()) c.scheme = scheme;
    if (!weight.empty()) c.weight = weight;
    if (!id.empty()) c.id_column = id;
    if (!spec.empty()) c.spec = spec;
    c.out = out;
    c.seed_given = app.get_subcommands().front()->count("--seed") > 0;

    try {
        for (const auto& mname : models) c.models.push_back(parse_model_kind(mname));
        if (c.scheme && !fs::exists(*c.scheme)) throw ConfigError("scheme file not found: " + c.scheme->string());
        for (const auto& pf : c.params)
            if (!fs::exists(pf)) throw ConfigError("parameter file not found: " + pf.string());

        if (recode->parsed()) {
            auto r = cmd_recode(c);
            std::cout << "recoded " << r.n_in << " persons; kept " << r.n_out << ", excluded "
                      << r.excluded_ids.size() << "\n";
        } else if (fit->parsed()) {
            auto r = cmd_fit(c);
            for (const auto& f : r.fits) {
                std::cout << to_string(f.model) << ": loglik " << csv::format_fixed(f.loglik, 2) << "  AIC "
                          << csv::format_fixed(f.aic, 2) << "  BIC " << csv::format_fixed(f.bic, 2) << "  iterations "
                          << f.iterations << (f.converged ? "" : "  (not converged)") << "\n";
            }
            if (!r.all_converged) return exit_convergence;
        } else if (score->parsed()) {
            auto r = cmd_score(c);
            std::cout << "scored " << r.persons << " persons -> " << r.scores_csv.string() << "\n";
        } else if (compare->parsed()) {
            auto r = cmd_compare(c);
            for (const auto& row : r.rows) {
                std::cout << row.model << ": dAIC " << csv::format_fixed(row.delta_aic, 2) << " ("
                          << to_string(row.verdict_aic) << "), dBIC " << csv::format_fixed(row.delta_bic, 2) << " ("
                          << to_string(row.verdict_bic) << ")\n";
            }
        } else if (summarize->parsed()) {
            auto r = cmd_summarize(c);
            std::cout << "wrote " << r.summary_csv.string() << " and " << r.plot_csv.string() << "\n";
        } else if (simulate_cmd->parsed()) {
            std::cout << "wrote " << cmd_simulate(c).string() << "\n";
        } else if (cross->parsed()) {
            std::cout << "wrote " << cmd_crosstab(c).string() << "\n";
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return exit_config;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return exit_data;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_internal;
    }
    return exit_ok;
}

}  // namespace polyscale::cli
