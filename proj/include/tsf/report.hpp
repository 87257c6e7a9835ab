#pragma once

#include "tsf/csv.hpp"
#include "tsf/tuner.hpp"

#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace tsf {

using ModelDataset = std::pair<std::string, std::string>;

/// (model, dataset) -> horizon-averaged MSE; nullopt marks an OOM/absent cell.
using AvgTable = std::map<ModelDataset, std::optional<double>>;

/// Test MSE per (model, dataset, horizon). A missing entry is stored as
/// nullopt (the OOM marker of published tables).
class ResultsTable {
public:
    struct Key {
        std::string model;
        std::string dataset;
        Index horizon = 0;
        auto operator<=>(const Key&) const = default;
    };

    void add(const std::string& model, const std::string& dataset, Index horizon, double mse) {
        if (!(mse >= 0.0)) throw std::invalid_argument("MSE must be non-negative");
        insert({model, dataset, horizon}, mse);
    }

    void mark_missing(const std::string& model, const std::string& dataset, Index horizon) {
        insert({model, dataset, horizon}, std::nullopt);
    }

    [[nodiscard]] const std::map<Key, std::optional<double>>& entries() const noexcept { return entries_; }

private:
    void insert(Key key, std::optional<double> value) {
        if (entries_.count(key)) {
            throw std::invalid_argument("duplicate result for (" + key.model + ", " + key.dataset + ", H=" +
                                        std::to_string(key.horizon) + ")");
        }
        entries_.emplace(std::move(key), value);
    }

    std::map<Key, std::optional<double>> entries_;
};

/// Mean over `horizons` per (model, dataset). A cell whose listed horizons are
/// all marked missing stays missing; any other gap is an error.
inline AvgTable average_over_horizons(const ResultsTable& table, const std::vector<Index>& horizons) {
    if (horizons.empty()) throw std::invalid_argument("no horizons to average over");
    std::set<ModelDataset> cells;
    for (const auto& [key, value] : table.entries()) cells.emplace(key.model, key.dataset);
    AvgTable out;
    for (const auto& cell : cells) {
        double sum = 0.0;
        int present = 0, missing = 0;
        for (Index h : horizons) {
            auto it = table.entries().find({cell.first, cell.second, h});
            if (it == table.entries().end()) {
                throw std::invalid_argument("cell (" + cell.first + ", " + cell.second + ") has no entry for horizon " +
                                            std::to_string(h));
            }
            if (it->second) {
                sum += *it->second;
                ++present;
            } else {
                ++missing;
            }
        }
        if (present > 0 && missing > 0) {
            throw std::invalid_argument("cell (" + cell.first + ", " + cell.second +
                                        ") mixes present and missing horizons");
        }
        out[cell] = present > 0 ? std::optional<double>(sum / static_cast<double>(present)) : std::nullopt;
    }
    return out;
}

struct RankResult {
    std::map<ModelDataset, double> ranks;
    std::map<std::string, double> avg_rank;
    std::map<std::string, int> wins;
};

/// Ascending-MSE ranks per dataset over present models (ties share the mean
/// rank), mean rank per model over the datasets where it is present, and wins
/// (every model attaining a dataset's minimum gets one).
inline RankResult rank_and_wins(const AvgTable& avg) {
    if (avg.empty()) throw std::invalid_argument("rank_and_wins: empty table");
    std::map<std::string, std::vector<std::pair<double, std::string>>> by_dataset;
    RankResult out;
    for (const auto& [cell, value] : avg) {
        out.wins.emplace(cell.first, 0);
        if (value) by_dataset[cell.second].emplace_back(*value, cell.first);
    }
    std::map<std::string, std::pair<double, int>> rank_sum;
    for (auto& [dataset, row] : by_dataset) {
        std::sort(row.begin(), row.end());
        for (std::size_t i = 0; i < row.size();) {
            std::size_t j = i;
            while (j < row.size() && row[j].first == row[i].first) ++j;
            const double rank = 0.5 * static_cast<double>(i + 1 + j);  // mean of ranks i+1 .. j
            for (std::size_t k = i; k < j; ++k) {
                out.ranks[{row[k].second, dataset}] = rank;
                auto& acc = rank_sum[row[k].second];
                acc.first += rank;
                acc.second += 1;
                if (i == 0) ++out.wins[row[k].second];
            }
            i = j;
        }
    }
    for (const auto& [model, acc] : rank_sum) out.avg_rank[model] = acc.first / acc.second;
    return out;
}

enum class Grouping { ByModel, ByDataset };

/// Count of best lookbacks per group: group -> lookback -> count.
using LookbackHistogram = std::map<std::string, std::map<Index, int>>;

inline LookbackHistogram lookback_histogram(const std::vector<TuneReport>& reports, Grouping grouping) {
    LookbackHistogram hist;
    for (const auto& r : reports) {
        ++hist[grouping == Grouping::ByModel ? r.model_id : r.dataset][r.best_lookback];
    }
    return hist;
}

struct MatchupCount {
    int ci_wins = 0;
    int cd_wins = 0;
    bool operator==(const MatchupCount&) const = default;
};

struct Matchup {
    /// (model family, dataset family) -> counts
    std::map<std::pair<std::string, std::string>, MatchupCount> counts;
    /// (model family, dataset) pairs skipped because a variant is missing
    std::vector<std::pair<std::string, std::string>> skipped;
};

/// Counts datasets where the CI variant's average is strictly below the CD
/// variant's and vice versa; exact ties count for neither. Datasets absent from
/// `dataset_families` belong to the family "all".
inline Matchup ci_cd_matchup(const AvgTable& avg,
                             const std::map<std::string, std::pair<std::string, std::string>>& pairing,
                             const std::map<std::string, std::string>& dataset_families) {
    std::set<std::string> datasets;
    for (const auto& [cell, value] : avg) datasets.insert(cell.second);
    Matchup out;
    for (const auto& [family, ids] : pairing) {
        for (const auto& dataset : datasets) {
            const auto dfam_it = dataset_families.find(dataset);
            const std::string dfam = dfam_it == dataset_families.end() ? "all" : dfam_it->second;
            const auto ci = avg.find({ids.first, dataset});
            const auto cd = avg.find({ids.second, dataset});
            const bool has_ci = ci != avg.end() && ci->second;
            const bool has_cd = cd != avg.end() && cd->second;
            if (!has_ci && !has_cd) continue;
            auto& count = out.counts[{family, dfam}];
            if (!has_ci || !has_cd) {
                out.skipped.emplace_back(family, dataset);
                continue;
            }
            if (*ci->second < *cd->second) ++count.ci_wins;
            if (*cd->second < *ci->second) ++count.cd_wins;
        }
    }
    return out;
}

/// Pairs "<family>-CI" with "<family>-CD" among the model ids of `avg`.
inline std::map<std::string, std::pair<std::string, std::string>> infer_ci_cd_pairing(const AvgTable& avg) {
    std::set<std::string> models;
    for (const auto& [cell, value] : avg) models.insert(cell.first);
    std::map<std::string, std::pair<std::string, std::string>> pairing;
    for (const auto& m : models) {
        if (m.size() > 3 && m.compare(m.size() - 3, 3, "-CI") == 0) {
            const std::string family = m.substr(0, m.size() - 3);
            if (models.count(family + "-CD")) pairing[family] = {m, family + "-CD"};
        }
    }
    return pairing;
}

struct SummaryReport {
    AvgTable avg_mse;
    std::map<ModelDataset, double> ranks;
    std::map<std::string, double> avg_rank;
    std::map<std::string, int> wins;
    LookbackHistogram lookback_by_model;
    LookbackHistogram lookback_by_dataset;
    std::map<std::pair<std::string, std::string>, MatchupCount> matchup;
    std::vector<std::pair<std::string, std::string>> matchup_skipped;
    std::map<std::string, std::string> policies;

    bool operator==(const SummaryReport&) const = default;
};

inline std::map<std::string, std::string> default_policies() {
    return {{"ties", "shared wins; tied models share the mean of their ranks"},
            {"missing", "missing/OOM cells excluded from ranking; avg_rank over present datasets only"},
            {"avg_rank_alternative", "worst-rank imputation for missing cells (not applied)"},
            {"matchup_ties", "exact ties counted for neither variant"},
            {"revin", "affine parameters fixed to identity"}};
}

/// Aggregates tuning reports: ResultsTable of best test MSE per
/// (model_id, dataset, horizon), averaged over `horizons` (all horizons seen when
/// empty), then ranks, wins, lookback histograms and CI/CD matchups.
inline SummaryReport summarize(const std::vector<TuneReport>& reports, std::vector<Index> horizons = {},
                               const std::map<std::string, std::string>& dataset_families = {}) {
    if (reports.empty()) throw std::invalid_argument("no tuning reports to summarize");
    ResultsTable table;
    std::set<Index> seen;
    for (const auto& r : reports) {
        table.add(r.model_id, r.dataset, r.horizon, best_test_mse(r));
        seen.insert(r.horizon);
    }
    if (horizons.empty()) horizons.assign(seen.begin(), seen.end());
    SummaryReport s;
    s.avg_mse = average_over_horizons(table, horizons);
    auto rw = rank_and_wins(s.avg_mse);
    s.ranks = std::move(rw.ranks);
    s.avg_rank = std::move(rw.avg_rank);
    s.wins = std::move(rw.wins);
    s.lookback_by_model = lookback_histogram(reports, Grouping::ByModel);
    s.lookback_by_dataset = lookback_histogram(reports, Grouping::ByDataset);
    auto m = ci_cd_matchup(s.avg_mse, infer_ci_cd_pairing(s.avg_mse), dataset_families);
    s.matchup = std::move(m.counts);
    s.matchup_skipped = std::move(m.skipped);
    s.policies = default_policies();
    return s;
}

// ---------------------------------------------------------------------------
// Export

inline nlohmann::json to_json(const SummaryReport& s) {
    nlohmann::json j;
    j["avg_mse"] = nlohmann::json::object();
    for (const auto& [cell, v] : s.avg_mse) {
        j["avg_mse"][cell.first][cell.second] = v ? nlohmann::json(*v) : nlohmann::json(nullptr);
    }
    j["ranks"] = nlohmann::json::object();
    for (const auto& [cell, v] : s.ranks) j["ranks"][cell.first][cell.second] = v;
    j["avg_rank"] = s.avg_rank;
    j["wins"] = s.wins;
    auto hist = [](const LookbackHistogram& h) {
        nlohmann::json out = nlohmann::json::object();
        for (const auto& [group, counts] : h) {
            for (const auto& [lookback, n] : counts) out[group][std::to_string(lookback)] = n;
        }
        return out;
    };
    j["lookback_hist"] = {{"by_model", hist(s.lookback_by_model)}, {"by_dataset", hist(s.lookback_by_dataset)}};
    j["matchup"] = nlohmann::json::object();
    for (const auto& [key, c] : s.matchup) {
        j["matchup"][key.first][key.second] = {{"ci_wins", c.ci_wins}, {"cd_wins", c.cd_wins}};
    }
    j["matchup_skipped"] = nlohmann::json::array();
    for (const auto& [family, dataset] : s.matchup_skipped) j["matchup_skipped"].push_back({family, dataset});
    j["policies"] = s.policies;
    return j;
}

inline SummaryReport summary_from_json(const nlohmann::json& j) {
    SummaryReport s;
    for (const auto& [model, row] : j.at("avg_mse").items()) {
        for (const auto& [dataset, v] : row.items()) {
            s.avg_mse[{model, dataset}] = v.is_null() ? std::nullopt : std::optional<double>(v.get<double>());
        }
    }
    for (const auto& [model, row] : j.at("ranks").items()) {
        for (const auto& [dataset, v] : row.items()) s.ranks[{model, dataset}] = v.get<double>();
    }
    s.avg_rank = j.at("avg_rank").get<std::map<std::string, double>>();
    s.wins = j.at("wins").get<std::map<std::string, int>>();
    auto hist = [](const nlohmann::json& h) {
        LookbackHistogram out;
        for (const auto& [group, counts] : h.items()) {
            for (const auto& [lookback, n] : counts.items()) out[group][std::stol(lookback)] = n.get<int>();
        }
        return out;
    };
    s.lookback_by_model = hist(j.at("lookback_hist").at("by_model"));
    s.lookback_by_dataset = hist(j.at("lookback_hist").at("by_dataset"));
    for (const auto& [family, row] : j.at("matchup").items()) {
        for (const auto& [dfam, c] : row.items()) {
            s.matchup[{family, dfam}] = {c.at("ci_wins").get<int>(), c.at("cd_wins").get<int>()};
        }
    }
    for (const auto& p : j.at("matchup_skipped")) {
        s.matchup_skipped.emplace_back(p.at(0).get<std::string>(), p.at(1).get<std::string>());
    }
    s.policies = j.at("policies").get<std::map<std::string, std::string>>();
    return s;
}

enum class ReportFormat { Json, Csv };

inline ReportFormat parse_report_format(std::string_view tag) {
    if (tag == "json") return ReportFormat::Json;
    if (tag == "csv") return ReportFormat::Csv;
    throw std::invalid_argument("unsupported report format '" + std::string(tag) + "' (expected json or csv)");
}

namespace detail {

inline std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char ch : s) out += ch == '"' ? std::string("\"\"") : std::string(1, ch);
    return out + "\"";
}

inline std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    return out;
}

}  // namespace detail

/// Paths written by export_report: the file itself for JSON; for CSV one file
/// per table named <stem>_<table>.csv next to `path`.
inline std::vector<std::filesystem::path> report_outputs(const std::filesystem::path& path, ReportFormat format) {
    if (format == ReportFormat::Json) return {path};
    std::vector<std::filesystem::path> out;
    for (const char* table : {"avg_mse", "ranks", "avg_rank", "wins", "lookback_hist", "matchup"}) {
        out.push_back(path.parent_path() / (path.stem().string() + "_" + table + ".csv"));
    }
    return out;
}

inline void export_report(const SummaryReport& s, const std::filesystem::path& path, ReportFormat format) {
    if (format == ReportFormat::Json) {
        auto out = detail::open_output(path);
        out << to_json(s).dump(2) << '\n';
        if (!out) throw std::runtime_error("I/O failure writing '" + path.string() + "'");
        return;
    }
    using detail::csv_field;
    using detail::format_exact;
    const auto files = report_outputs(path, format);
    {
        auto out = detail::open_output(files[0]);
        out << "model,dataset,avg_mse\n";
        for (const auto& [cell, v] : s.avg_mse) {
            out << csv_field(cell.first) << ',' << csv_field(cell.second) << ',' << (v ? format_exact(*v) : "OOM")
                << '\n';
        }
    }
    {
        auto out = detail::open_output(files[1]);
        out << "model,dataset,rank\n";
        for (const auto& [cell, v] : s.ranks) {
            out << csv_field(cell.first) << ',' << csv_field(cell.second) << ',' << format_exact(v) << '\n';
        }
    }
    {
        auto out = detail::open_output(files[2]);
        out << "model,avg_rank\n";
        for (const auto& [model, v] : s.avg_rank) out << csv_field(model) << ',' << format_exact(v) << '\n';
    }
    {
        auto out = detail::open_output(files[3]);
        out << "model,wins\n";
        for (const auto& [model, v] : s.wins) out << csv_field(model) << ',' << v << '\n';
    }
    {
        auto out = detail::open_output(files[4]);
        out << "grouping,group,lookback,count\n";
        for (const auto& [group, counts] : s.lookback_by_model) {
            for (const auto& [l, n] : counts) out << "model," << csv_field(group) << ',' << l << ',' << n << '\n';
        }
        for (const auto& [group, counts] : s.lookback_by_dataset) {
            for (const auto& [l, n] : counts) out << "dataset," << csv_field(group) << ',' << l << ',' << n << '\n';
        }
    }
    {
        auto out = detail::open_output(files[5]);
        out << "model_family,dataset_family,ci_wins,cd_wins\n";
        for (const auto& [key, c] : s.matchup) {
            out << csv_field(key.first) << ',' << csv_field(key.second) << ',' << c.ci_wins << ',' << c.cd_wins << '\n';
        }
    }
}

inline void export_report(const SummaryReport& s, const std::filesystem::path& path, std::string_view format) {
    export_report(s, path, parse_report_format(format));
}

inline SummaryReport import_report(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open report '" + path.string() + "'");
    return summary_from_json(nlohmann::json::parse(in));
}

}  // namespace tsf
