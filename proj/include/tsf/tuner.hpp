#pragma once

#include "tsf/csv.hpp"
#include "tsf/forecasters.hpp"
#include "tsf/random.hpp"
#include "tsf/windowing.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

namespace tsf {

struct SearchSpace {
    std::vector<Index> lookbacks{96, 192, 336, 512, 720};
    double lambda_min = 1e-6;
    double lambda_max = 1e2;
    std::vector<Index> kernels{1, 13, 25, 49};
    std::vector<Family> families{Family::PlainLinear, Family::DLinear};
    std::vector<ChannelMode> modes{ChannelMode::CI, ChannelMode::CD};
    std::vector<bool> revin{false, true};
    bool intercept = false;
    bool individual = false;

    void validate() const {
        if (lookbacks.empty() || kernels.empty() || families.empty() || modes.empty() || revin.empty()) {
            throw std::invalid_argument("search space: every candidate set must be nonempty");
        }
        for (Index l : lookbacks) {
            if (l < 1) throw std::invalid_argument("search space: lookbacks must be positive");
        }
        for (Index k : kernels) {
            if (k < 1 || k % 2 == 0) throw std::invalid_argument("search space: kernels must be odd and positive");
        }
        if (!(lambda_min > 0.0) || !(lambda_max >= lambda_min) || !std::isfinite(lambda_max)) {
            throw std::invalid_argument("search space: lambda range must be positive with min <= max");
        }
    }
};

/// Identifier of the model a search tunes, e.g. "PlainLinear-CD" or "DLinear+PlainLinear-CI+CD".
inline std::string space_model_id(const SearchSpace& space) {
    std::set<std::string> fams, modes;
    for (auto f : space.families) fams.insert(std::string(family_name(f)));
    for (auto m : space.modes) modes.insert(std::string(mode_name(m)));
    auto join = [](const std::set<std::string>& s) {
        std::string out;
        for (const auto& x : s) out += (out.empty() ? "" : "+") + x;
        return out;
    };
    return join(fams) + "-" + join(modes);
}

/// Deterministic draw for (seed, trial_index, attempt). Attempt > 0 is used
/// only to redraw infeasible configurations.
inline ForecasterSpec sample_trial_config(const SearchSpace& space, std::uint64_t seed, Index trial_index,
                                          Index horizon, Index attempt = 0) {
    space.validate();
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(trial_index), static_cast<std::uint64_t>(attempt)));
    auto pick = [&rng](const auto& v) { return v[static_cast<std::size_t>(rng.below(v.size()))]; };
    ForecasterSpec spec;
    spec.horizon = horizon;
    spec.lookback = pick(space.lookbacks);
    const double lo = std::log(space.lambda_min);
    const double hi = std::log(space.lambda_max);
    spec.ridge_lambda = space.lambda_min == space.lambda_max ? space.lambda_min : std::exp(rng.uniform(lo, hi));
    spec.ma_kernel = pick(space.kernels);
    spec.family = pick(space.families);
    spec.mode = pick(space.modes);
    spec.revin = pick(space.revin);
    spec.intercept = space.intercept;
    spec.individual = space.individual && spec.mode == ChannelMode::CI;
    return spec;
}

/// Flat "key = value" file; values are comma-separated lists where the field is
/// a set. Keys: lookbacks, lambda_min, lambda_max, kernels, families, modes,
/// revin (on/off list), intercept, individual. '#' starts a comment.
inline SearchSpace parse_search_space(std::istream& in) {
    SearchSpace space;
    std::string line;
    int line_no = 0;
    auto items = [](const std::string& v) {
        std::vector<std::string> out;
        for (auto f : detail::split_fields(v)) {
            if (!f.empty()) out.emplace_back(f);
        }
        return out;
    };
    auto to_index = [&](const std::string& s) {
        double d = 0.0;
        if (!detail::parse_finite(s, d) || d != std::floor(d)) {
            throw std::invalid_argument("search space line " + std::to_string(line_no) + ": bad integer '" + s + "'");
        }
        return static_cast<Index>(d);
    };
    auto to_double = [&](const std::string& s) {
        double d = 0.0;
        if (!detail::parse_finite(s, d)) {
            throw std::invalid_argument("search space line " + std::to_string(line_no) + ": bad number '" + s + "'");
        }
        return d;
    };
    auto to_bool = [&](const std::string& s) {
        if (s == "on" || s == "true" || s == "1") return true;
        if (s == "off" || s == "false" || s == "0") return false;
        throw std::invalid_argument("search space line " + std::to_string(line_no) + ": bad flag '" + s + "'");
    };
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const auto trimmed = detail::trim(line);
        if (trimmed.empty()) continue;
        const auto eq = trimmed.find('=');
        if (eq == std::string_view::npos) {
            throw std::invalid_argument("search space line " + std::to_string(line_no) + ": expected key = value");
        }
        const std::string key(detail::trim(trimmed.substr(0, eq)));
        const std::string value(detail::trim(trimmed.substr(eq + 1)));
        const auto list = items(value);
        if (key == "lookbacks") {
            space.lookbacks.clear();
            for (const auto& s : list) space.lookbacks.push_back(to_index(s));
        } else if (key == "kernels") {
            space.kernels.clear();
            for (const auto& s : list) space.kernels.push_back(to_index(s));
        } else if (key == "lambda_min") {
            space.lambda_min = to_double(value);
        } else if (key == "lambda_max") {
            space.lambda_max = to_double(value);
        } else if (key == "families") {
            space.families.clear();
            for (const auto& s : list) space.families.push_back(parse_family(s));
        } else if (key == "modes") {
            space.modes.clear();
            for (const auto& s : list) space.modes.push_back(parse_mode(s));
        } else if (key == "revin") {
            space.revin.clear();
            for (const auto& s : list) space.revin.push_back(to_bool(s));
        } else if (key == "intercept") {
            space.intercept = to_bool(value);
        } else if (key == "individual") {
            space.individual = to_bool(value);
        } else {
            throw std::invalid_argument("search space line " + std::to_string(line_no) + ": unknown key '" + key + "'");
        }
    }
    space.validate();
    return space;
}

inline SearchSpace read_search_space(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open search space file '" + path.string() + "'");
    return parse_search_space(in);
}

struct TrialResult {
    Index trial_index = 0;
    ForecasterSpec spec;
    double val_mse = 0.0;
    std::optional<double> test_mse;  // selected trial only
    double fit_seconds = 0.0;
};

struct TuneReport {
    std::string dataset;
    std::string model_id;
    Index horizon = 0;
    Index budget = 0;
    std::uint64_t seed = 0;
    std::vector<TrialResult> trials;
    Index best = 0;
    Index best_lookback = 0;
    Index redraws = 0;
};

struct TuneResult {
    TuneReport report;
    FittedForecaster model;
};

namespace detail {

inline bool trial_feasible(const ForecasterSpec& spec, const SplitSeries& data) {
    const Index need = spec.lookback + spec.horizon;
    if (data.train.length() < need || data.val.length() < need || data.test.length() < need) return false;
    return spec.family != Family::DLinear || spec.ma_kernel <= spec.lookback;
}

/// Normal equations depend on everything in the spec except the ridge strength.
inline auto gram_key(const ForecasterSpec& s) {
    return std::make_tuple(static_cast<int>(s.family), static_cast<int>(s.mode), s.lookback,
                           s.family == Family::DLinear ? s.ma_kernel : Index(0), s.revin, s.intercept, s.individual);
}

}  // namespace detail

inline constexpr Index kMaxRedrawAttempts = 10000;

/// Upper bound on memory held by cached normal equations; the oldest entries
/// are evicted first.
inline constexpr std::size_t kGramCacheBytes = std::size_t(1) << 30;

namespace detail {

inline std::size_t normal_equation_bytes(const NormalEquations& ne) {
    std::size_t n = 0;
    for (const auto& g : ne.gram) n += static_cast<std::size_t>(g.size());
    for (const auto& c : ne.cross) n += static_cast<std::size_t>(c.size());
    return n * sizeof(double);
}

}  // namespace detail

/// Seeded random search. Each trial is fitted on the train windows and scored
/// on the validation windows; the lowest validation MSE wins (ties go to the
/// lower trial index) and only that fitted model is scored on test.
inline TuneResult run_search(const SplitSeries& data, Index horizon, const SearchSpace& space, Index budget,
                             std::uint64_t seed, const std::string& dataset = {}) {
    space.validate();
    if (budget < 1) throw std::invalid_argument("search budget must be at least 1");
    if (horizon < 1) throw std::invalid_argument("horizon must be positive");
    const Index shortest =
        std::min({data.train.length(), data.val.length(), data.test.length()});
    const bool any_fits = std::any_of(space.lookbacks.begin(), space.lookbacks.end(),
                                      [&](Index l) { return l + horizon <= shortest; });
    if (!any_fits) {
        throw std::invalid_argument("no candidate lookback fits: every lookback + horizon " + std::to_string(horizon) +
                                    " exceeds the shortest split segment (" + std::to_string(shortest) + " steps)");
    }

    TuneReport report;
    report.dataset = dataset.empty() ? data.train.name : dataset;
    report.model_id = space_model_id(space);
    report.horizon = horizon;
    report.budget = budget;
    report.seed = seed;

    using Key = decltype(detail::gram_key(ForecasterSpec{}));
    std::map<Key, NormalEquations> cache;
    std::deque<Key> cache_order;
    std::size_t cache_bytes = 0;
    std::optional<FittedForecaster> best_model;
    double best_val = std::numeric_limits<double>::infinity();

    for (Index t = 0; t < budget; ++t) {
        ForecasterSpec spec;
        for (Index attempt = 0;; ++attempt) {
            if (attempt >= kMaxRedrawAttempts) {
                throw std::runtime_error("trial " + std::to_string(t) + ": no feasible configuration after " +
                                         std::to_string(kMaxRedrawAttempts) + " draws");
            }
            spec = sample_trial_config(space, seed, t, horizon, attempt);
            if (detail::trial_feasible(spec, data)) break;
            ++report.redraws;
        }
        const auto start = std::chrono::steady_clock::now();
        const auto key = detail::gram_key(spec);
        auto it = cache.find(key);
        if (it == cache.end()) {
            NormalEquations ne = build_normal_equations(spec, make_windows(data.train, spec.lookback, horizon));
            const std::size_t bytes = detail::normal_equation_bytes(ne);
            while (!cache_order.empty() && cache_bytes + bytes > kGramCacheBytes) {
                auto old = cache.find(cache_order.front());
                cache_bytes -= detail::normal_equation_bytes(old->second);
                cache.erase(old);
                cache_order.pop_front();
            }
            it = cache.emplace(key, std::move(ne)).first;
            cache_order.push_back(key);
            cache_bytes += bytes;
        }
        FittedForecaster model = solve_normal_equations(spec, data.train.channels(), it->second);
        const double fit_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const double val = evaluate_mse(model, make_windows(data.val, spec.lookback, horizon));
        report.trials.push_back(TrialResult{t, spec, val, std::nullopt, fit_seconds});
        if (val < best_val || !best_model) {
            best_val = val;
            report.best = t;
            best_model.emplace(std::move(model));
        }
    }
    auto& winner = report.trials[static_cast<std::size_t>(report.best)];
    report.best_lookback = winner.spec.lookback;
    winner.test_mse = evaluate_mse(*best_model, make_windows(data.test, winner.spec.lookback, horizon));
    return TuneResult{std::move(report), std::move(*best_model)};
}

// ---------------------------------------------------------------------------
// Export

inline nlohmann::json to_json(const ForecasterSpec& s) {
    return {{"family", family_name(s.family)},
            {"channel_mode", mode_name(s.mode)},
            {"lookback", s.lookback},
            {"horizon", s.horizon},
            {"ridge_lambda", s.ridge_lambda},
            {"ma_kernel", s.ma_kernel},
            {"revin", s.revin},
            {"intercept", s.intercept},
            {"individual", s.individual}};
}

inline ForecasterSpec spec_from_json(const nlohmann::json& j) {
    ForecasterSpec s;
    s.family = parse_family(j.at("family").get<std::string>());
    s.mode = parse_mode(j.at("channel_mode").get<std::string>());
    s.lookback = j.at("lookback").get<Index>();
    s.horizon = j.at("horizon").get<Index>();
    s.ridge_lambda = j.at("ridge_lambda").get<double>();
    s.ma_kernel = j.at("ma_kernel").get<Index>();
    s.revin = j.at("revin").get<bool>();
    s.intercept = j.value("intercept", false);
    s.individual = j.value("individual", false);
    return s;
}

/// fit_seconds is wall-clock time and is written only when `record_timings` is
/// set, so default output depends on nothing but the inputs and the seed.
inline nlohmann::json to_json(const TuneReport& r, bool record_timings = false) {
    nlohmann::json trials = nlohmann::json::array();
    for (const auto& t : r.trials) {
        nlohmann::json j{{"trial_index", t.trial_index},
                         {"spec", to_json(t.spec)},
                         {"val_mse", t.val_mse},
                         {"test_mse", t.test_mse ? nlohmann::json(*t.test_mse) : nlohmann::json(nullptr)}};
        if (record_timings) j["fit_seconds"] = t.fit_seconds;
        trials.push_back(std::move(j));
    }
    return {{"dataset", r.dataset},  {"model_id", r.model_id},           {"horizon", r.horizon},
            {"budget", r.budget},    {"seed", r.seed},                   {"trials", trials},
            {"best", r.best},        {"best_lookback", r.best_lookback}, {"redraws", r.redraws}};
}

inline TuneReport tune_report_from_json(const nlohmann::json& j) {
    TuneReport r;
    r.dataset = j.at("dataset").get<std::string>();
    r.model_id = j.at("model_id").get<std::string>();
    r.horizon = j.at("horizon").get<Index>();
    r.budget = j.at("budget").get<Index>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.best = j.at("best").get<Index>();
    r.best_lookback = j.at("best_lookback").get<Index>();
    r.redraws = j.value("redraws", Index(0));
    for (const auto& t : j.at("trials")) {
        TrialResult tr;
        tr.trial_index = t.at("trial_index").get<Index>();
        tr.spec = spec_from_json(t.at("spec"));
        tr.val_mse = t.at("val_mse").get<double>();
        if (t.contains("test_mse") && !t.at("test_mse").is_null()) tr.test_mse = t.at("test_mse").get<double>();
        tr.fit_seconds = t.value("fit_seconds", 0.0);
        r.trials.push_back(std::move(tr));
    }
    if (r.best < 0 || r.best >= static_cast<Index>(r.trials.size())) {
        throw std::invalid_argument("tune report: best trial index out of range");
    }
    return r;
}

/// Test MSE of the selected trial.
inline double best_test_mse(const TuneReport& r) {
    const auto& t = r.trials.at(static_cast<std::size_t>(r.best));
    if (!t.test_mse) throw std::invalid_argument("tune report: selected trial has no test MSE");
    return *t.test_mse;
}

}  // namespace tsf
