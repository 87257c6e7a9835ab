#pragma once

// Published horizon-averaged MSE tables used as report fixtures.

#include "tsf/report.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace fixtures {

inline const std::array<std::string, 10> kModels = {"PatchTST-CI",   "PatchTST-CD",    "TSMixer-CI", "TSMixer-CD",
                                                    "Crossformer-CI", "Crossformer-CD", "DLinear",    "iTransformer",
                                                    "TimeMixer-CI",  "TimeMixer-CD"};

struct Row {
    const char* dataset;
    std::array<double, 10> mse;  // NaN = OOM
};

inline constexpr double kOom = std::numeric_limits<double>::quiet_NaN();

/// Standard datasets, averaged over horizons 96/192/336/720.
inline const std::vector<Row>& standard_table() {
    static const std::vector<Row> rows = {
        {"ETTh1", {0.422, 0.437, 0.438, 0.453, 0.477, 0.456, 0.423, 0.511, 0.434, 0.489}},
        {"Weather", {0.245, 0.233, 0.230, 0.241, 0.236, 0.296, 0.289, 0.253, 0.247, 0.246}},
        {"Electricity", {0.159, 0.170, 0.162, 0.170, 0.166, 0.188, 0.162, 0.220, 0.173, 0.260}},
        {"ETTh2", {0.365, 0.382, 0.378, 0.390, 0.741, 0.691, 0.507, 0.363, 0.371, 0.378}},
        {"ETTm1", {0.356, 0.371, 0.356, 0.370, 0.393, 0.426, 0.359, 0.374, 0.355, 0.408}},
        {"ETTm2", {0.258, 0.259, 0.257, 0.273, 0.433, 0.485, 0.289, 0.257, 0.275, 0.342}},
        {"Traffic", {0.388, kOom, 0.407, 0.417, kOom, 0.542, 0.426, kOom, kOom, 0.388}},
    };
    return rows;
}

/// Published "Wins" row of the standard-dataset table, in kModels order.
inline constexpr std::array<int, 10> kStandardWins = {3, 0, 2, 0, 0, 0, 0, 2, 1, 0};

/// ODE datasets, averaged over horizons 96/192/336/720.
inline const std::vector<Row>& ode_table() {
    static const std::vector<Row> rows = {
        {"Lorenz", {0.839, 0.841, 0.880, 0.868, 0.667, 0.643, 0.934, 0.675, 0.764, 0.673}},
        {"BlinkingRotlet", {0.424, 0.426, 0.580, 0.487, 0.340, 0.311, 0.522, 0.426, 0.433, 0.520}},
        {"CellCycle", {0.635, 0.667, 0.792, 0.771, 0.429, 0.428, 0.935, 0.808, 0.679, 0.556}},
        {"DoublePendulum", {0.653, 0.668, 0.768, 0.737, 0.553, 0.541, 0.805, 0.656, 0.595, 0.529}},
        {"Hopfield", {0.420, 0.346, 0.507, 0.435, 0.335, 0.316, 0.690, 0.300, 0.622, 0.245}},
        {"LorenzCoupled", {0.881, 0.866, 0.950, 0.900, 0.700, 0.666, 0.963, 0.857, 0.788, 0.832}},
    };
    return rows;
}

inline tsf::AvgTable to_avg_table(const std::vector<Row>& rows) {
    tsf::AvgTable avg;
    for (const auto& row : rows) {
        for (std::size_t m = 0; m < kModels.size(); ++m) {
            const double v = row.mse[m];
            avg[{kModels[m], row.dataset}] = std::isnan(v) ? std::nullopt : std::optional<double>(v);
        }
    }
    return avg;
}

inline std::map<std::string, std::pair<std::string, std::string>> ci_cd_pairing() {
    return {{"PatchTST", {"PatchTST-CI", "PatchTST-CD"}},
            {"TSMixer", {"TSMixer-CI", "TSMixer-CD"}},
            {"Crossformer", {"Crossformer-CI", "Crossformer-CD"}},
            {"TimeMixer", {"TimeMixer-CI", "TimeMixer-CD"}}};
}

}  // namespace fixtures
