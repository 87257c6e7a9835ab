#pragma once

#include "tsf/benchmark.hpp"
#include "tsf/csv.hpp"
#include "tsf/forecasters.hpp"
#include "tsf/granger.hpp"
#include "tsf/normalizer.hpp"
#include "tsf/report.hpp"
#include "tsf/tuner.hpp"
#include "tsf/windowing.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace tsf {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitRuntime = 2;

/// Z-scores all three segments with the training segment's statistics.
inline SplitSeries normalize_splits(const SplitSeries& s) {
    const Normalizer norm = fit_normalizer(s.train);
    return SplitSeries{apply_normalizer(s.train, norm, Direction::Forward),
                       apply_normalizer(s.val, norm, Direction::Forward),
                       apply_normalizer(s.test, norm, Direction::Forward)};
}

namespace cli_detail {

struct SplitOptions {
    std::vector<double> ratios{0.7, 0.1, 0.2};
    std::vector<Index> boundaries;
};

inline void add_split_options(CLI::App* cmd, SplitOptions& opt) {
    cmd->add_option("--split", opt.ratios, "train,val,test ratios")->delimiter(',')->expected(3);
    cmd->add_option("--boundaries", opt.boundaries, "explicit train_end,val_end step indices")
        ->delimiter(',')
        ->expected(2);
}

inline SplitSeries split_for(const TimeSeries& series, const SplitOptions& opt) {
    if (!opt.boundaries.empty()) return split_at(series, opt.boundaries[0], opt.boundaries[1]);
    SplitSpec spec;
    std::copy(opt.ratios.begin(), opt.ratios.end(), spec.ratios.begin());
    return split_series(series, spec);
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    out << text;
    if (!out) throw std::runtime_error("I/O failure writing '" + path.string() + "'");
}

inline void emit_json(const nlohmann::json& j, const std::string& path, std::ostream& out) {
    const std::string text = j.dump(2) + "\n";
    if (path.empty()) {
        out << text;
    } else {
        write_text(path, text);
    }
}

/// "name = family" lines; '#' starts a comment.
inline std::map<std::string, std::string> read_key_values(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
    std::map<std::string, std::string> out;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const auto trimmed = detail::trim(line);
        if (trimmed.empty()) continue;
        const auto eq = trimmed.find('=');
        if (eq == std::string_view::npos) {
            throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": expected key = value");
        }
        out[std::string(detail::trim(trimmed.substr(0, eq)))] = std::string(detail::trim(trimmed.substr(eq + 1)));
    }
    return out;
}

}  // namespace cli_detail

/// Runs the command line `args` (without the program name). Returns 0 on
/// success or help, 1 on usage errors (usage printed to `err`), 2 on runtime
/// failures (one-line diagnostic on `err`).
inline int run_cli(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"Time-series forecasting evaluation toolkit: chaotic-ODE benchmarks, Granger analysis, "
                 "lookback-tuned linear forecasters and summary reports.",
                 "tsf"};
    app.require_subcommand(1);
    app.failure_message(CLI::FailureMessage::help);

    // generate
    auto* gen = app.add_subcommand("generate", "Integrate the six-system ODE benchmark and write CSVs + manifest");
    std::string gen_out;
    IntegratorConfig gen_cfg;
    std::vector<std::string> gen_systems;
    gen->add_option("--out", gen_out, "output directory")->required();
    gen->add_option("--seed", gen_cfg.seed, "initial-condition perturbation seed")->capture_default_str();
    gen->add_option("--steps", gen_cfg.steps, "recorded steps per system")->capture_default_str();
    gen->add_option("--dt", gen_cfg.dt, "time units per step")->capture_default_str();
    gen->add_option("--transient", gen_cfg.transient_steps, "discarded leading steps")->capture_default_str();
    gen->add_option("--systems", gen_systems, "subset of systems (comma-separated)")->delimiter(',');

    // granger
    auto* gr = app.add_subcommand("granger", "Pairwise Granger-causality analysis of a CSV series");
    std::string gr_data, gr_out, gr_csv;
    GrangerConfig gr_cfg;
    bool gr_no_time = false;
    gr->add_option("--data", gr_data, "input CSV")->required();
    gr->add_option("--lag", gr_cfg.lag, "autoregression lag")->required();
    gr->add_option("--alpha", gr_cfg.alpha, "significance level")->capture_default_str();
    gr->add_option("--sample-len", gr_cfg.sample_len, "leading steps analyzed")->capture_default_str();
    gr->add_option("--pearson", gr_cfg.pearson_threshold, "redundancy threshold on |corr|")->capture_default_str();
    gr->add_option("--max-diff", gr_cfg.max_diff, "maximum differencing passes")->capture_default_str();
    gr->add_option("--out", gr_out, "JSON report path (default: standard output)");
    gr->add_option("--csv", gr_csv, "also write the pair table as CSV");
    gr->add_flag("--no-time-column", gr_no_time, "first CSV column is data, not a timestamp");

    // tune
    auto* tu = app.add_subcommand("tune", "Seeded lookback/hyperparameter search for linear forecasters");
    std::string tu_data, tu_space, tu_out, tu_model_out, tu_dataset;
    Index tu_horizon = 0;
    Index tu_budget = 20;
    std::uint64_t tu_seed = 3001;
    bool tu_timings = false, tu_no_time = false;
    cli_detail::SplitOptions tu_split;
    tu->add_option("--data", tu_data, "input CSV")->required();
    tu->add_option("--horizon", tu_horizon, "forecast horizon H")->required()->check(CLI::PositiveNumber);
    tu->add_option("--budget", tu_budget, "number of trials")->capture_default_str()->check(CLI::PositiveNumber);
    tu->add_option("--seed", tu_seed, "sampler seed")->capture_default_str();
    tu->add_option("--space", tu_space, "search-space file (key = value lines)");
    tu->add_option("--out", tu_out, "JSON report path (default: standard output)");
    tu->add_option("--model-out", tu_model_out, "write the selected fitted model");
    tu->add_option("--dataset", tu_dataset, "dataset id (default: file stem)");
    tu->add_flag("--record-timings", tu_timings, "include per-trial fit_seconds (not reproducible)");
    tu->add_flag("--no-time-column", tu_no_time, "first CSV column is data, not a timestamp");
    cli_detail::add_split_options(tu, tu_split);

    // evaluate
    auto* ev = app.add_subcommand("evaluate", "Test MSE of a saved model on a CSV series");
    std::string ev_data, ev_model;
    Index ev_horizon = 0;
    bool ev_no_time = false;
    cli_detail::SplitOptions ev_split;
    ev->add_option("--data", ev_data, "input CSV")->required();
    ev->add_option("--model", ev_model, "model file written by tune --model-out")->required();
    ev->add_option("--horizon", ev_horizon, "forecast horizon H")->required()->check(CLI::PositiveNumber);
    ev->add_flag("--no-time-column", ev_no_time, "first CSV column is data, not a timestamp");
    cli_detail::add_split_options(ev, ev_split);

    // report
    auto* rp = app.add_subcommand("report", "Aggregate tuning reports into ranks, wins, histograms and matchups");
    std::string rp_in, rp_out, rp_format = "json", rp_families;
    std::vector<Index> rp_horizons;
    rp->add_option("--in", rp_in, "directory of tuning-report JSON files")->required();
    rp->add_option("--out", rp_out, "output path (CSV: stem for one file per table)")->required();
    rp->add_option("--format", rp_format, "json or csv")->capture_default_str()->check(CLI::IsMember({"json", "csv"}));
    rp->add_option("--dataset-families", rp_families, "file of 'dataset = family' lines");
    rp->add_option("--horizons", rp_horizons, "horizons to average (default: all present)")->delimiter(',');

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (gen->parsed()) {
            std::vector<OdeSystem> systems;
            if (gen_systems.empty()) {
                for (auto kind : kBenchmarkSystems) systems.push_back(make_system(kind));
            } else {
                for (const auto& name : gen_systems) systems.push_back(make_system(name));
            }
            const Manifest m = generate_benchmark(gen_out, gen_cfg, systems);
            out << "wrote " << m.datasets.size() << " datasets to " << gen_out << '\n';
        } else if (gr->parsed()) {
            const TimeSeries series = load_csv(gr_data, !gr_no_time);
            const GrangerReport report = granger_analyze(series, gr_cfg);
            cli_detail::emit_json(to_json(report), gr_out, out);
            if (!gr_csv.empty()) write_granger_csv(report, gr_csv);
        } else if (tu->parsed()) {
            const TimeSeries series = load_csv(tu_data, !tu_no_time);
            const SplitSeries split = normalize_splits(cli_detail::split_for(series, tu_split));
            const SearchSpace space = tu_space.empty() ? SearchSpace{} : read_search_space(tu_space);
            const TuneResult result = run_search(split, tu_horizon, space, tu_budget, tu_seed,
                                                 tu_dataset.empty() ? series.name : tu_dataset);
            cli_detail::emit_json(to_json(result.report, tu_timings), tu_out, out);
            if (!tu_model_out.empty()) save_forecaster(result.model, std::filesystem::path(tu_model_out));
        } else if (ev->parsed()) {
            const FittedForecaster model = load_forecaster(std::filesystem::path(ev_model));
            if (model.spec().horizon != ev_horizon) {
                throw std::invalid_argument("model horizon is " + std::to_string(model.spec().horizon) +
                                            ", requested " + std::to_string(ev_horizon));
            }
            const TimeSeries series = load_csv(ev_data, !ev_no_time);
            const SplitSeries split = normalize_splits(cli_detail::split_for(series, ev_split));
            const double mse = evaluate_mse(model, make_windows(split.test, model.spec().lookback, ev_horizon));
            out << "test_mse " << detail::format_exact(mse) << '\n';
        } else if (rp->parsed()) {
            std::vector<std::filesystem::path> files;
            for (const auto& entry : std::filesystem::directory_iterator(rp_in)) {
                if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
            }
            std::sort(files.begin(), files.end());
            std::vector<TuneReport> reports;
            for (const auto& f : files) {
                std::ifstream in(f);
                const auto j = nlohmann::json::parse(in);
                if (!j.is_object() || !j.contains("trials") || !j.contains("model_id")) continue;
                reports.push_back(tune_report_from_json(j));
            }
            if (reports.empty()) throw std::runtime_error("no tuning reports found in '" + rp_in + "'");
            const auto families =
                rp_families.empty() ? std::map<std::string, std::string>{} : cli_detail::read_key_values(rp_families);
            const SummaryReport summary = summarize(reports, rp_horizons, families);
            export_report(summary, rp_out, rp_format);
            out << "summarized " << reports.size() << " tuning reports\n";
        }
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitOk;
}

}  // namespace tsf
