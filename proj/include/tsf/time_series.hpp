#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace tsf {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// A multivariate series stored channel-major: values(c, t) is channel c at step t.
///
/// `dt` is the model-time spacing between steps. Ingested real data carries 0
/// because its spacing is unknown to the toolkit.
struct TimeSeries {
    std::string name;
    std::vector<std::string> channel_names;
    Matrix values;
    double dt = 0.0;

    [[nodiscard]] Index channels() const noexcept { return values.rows(); }
    [[nodiscard]] Index length() const noexcept { return values.cols(); }

    /// Throws std::invalid_argument when an invariant does not hold.
    void validate() const {
        if (values.rows() < 1) throw std::invalid_argument("time series '" + name + "' has no channels");
        if (values.cols() < 1) throw std::invalid_argument("time series '" + name + "' has no timesteps");
        if (static_cast<Index>(channel_names.size()) != values.rows()) {
            throw std::invalid_argument("time series '" + name + "': " + std::to_string(channel_names.size()) +
                                        " channel names for " + std::to_string(values.rows()) + " channels");
        }
        for (Index t = 0; t < values.cols(); ++t) {
            for (Index c = 0; c < values.rows(); ++c) {
                if (!std::isfinite(values(c, t))) {
                    throw std::invalid_argument("time series '" + name + "': non-finite value at channel " +
                                                std::to_string(c) + ", step " + std::to_string(t));
                }
            }
        }
    }

    /// Columns [begin, end) as a new series with the same metadata.
    [[nodiscard]] TimeSeries slice(Index begin, Index end) const {
        if (begin < 0 || end > length() || begin > end) {
            throw std::out_of_range("slice [" + std::to_string(begin) + ", " + std::to_string(end) +
                                    ") outside series of length " + std::to_string(length()));
        }
        return TimeSeries{name, channel_names, values.middleCols(begin, end - begin), dt};
    }

    [[nodiscard]] std::vector<double> channel(Index c) const {
        std::vector<double> out(static_cast<std::size_t>(length()));
        for (Index t = 0; t < length(); ++t) out[static_cast<std::size_t>(t)] = values(c, t);
        return out;
    }
};

inline std::vector<std::string> default_channel_names(Index count) {
    std::vector<std::string> names;
    names.reserve(static_cast<std::size_t>(count));
    for (Index c = 0; c < count; ++c) names.push_back("ch" + std::to_string(c));
    return names;
}

/// Builds and validates a series; channel names default to ch0..ch{C-1}.
inline TimeSeries make_series(std::string name, Matrix values, std::vector<std::string> channel_names = {},
                              double dt = 0.0) {
    if (channel_names.empty()) channel_names = default_channel_names(values.rows());
    TimeSeries series{std::move(name), std::move(channel_names), std::move(values), dt};
    series.validate();
    return series;
}

}  // namespace tsf
