#pragma once

#include "tsf/time_series.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace tsf {

enum class Direction { Forward, Inverse };

/// Per-channel z-score statistics (population standard deviation).
struct Normalizer {
    Vector mean;
    Vector stdev;
};

/// Statistics of the training segment only. A channel with zero variance is an error.
inline Normalizer fit_normalizer(const TimeSeries& train) {
    const Index C = train.channels();
    const auto T = static_cast<double>(train.length());
    Normalizer norm{Vector(C), Vector(C)};
    for (Index c = 0; c < C; ++c) {
        const double mean = train.values.row(c).sum() / T;
        const double var = (train.values.row(c).array() - mean).square().sum() / T;
        if (!(var > 0.0)) {
            throw std::invalid_argument("channel '" + train.channel_names[static_cast<std::size_t>(c)] +
                                        "' has zero variance over the training segment");
        }
        norm.mean(c) = mean;
        norm.stdev(c) = std::sqrt(var);
    }
    return norm;
}

inline TimeSeries apply_normalizer(const TimeSeries& series, const Normalizer& norm, Direction direction) {
    if (series.channels() != norm.mean.size()) {
        throw std::invalid_argument("normalizer fitted on " + std::to_string(norm.mean.size()) +
                                    " channels applied to a series with " + std::to_string(series.channels()));
    }
    TimeSeries out = series;
    if (direction == Direction::Forward) {
        out.values = ((series.values.colwise() - norm.mean).array().colwise() / norm.stdev.array()).matrix();
    } else {
        out.values = ((series.values.array().colwise() * norm.stdev.array()).matrix().colwise() + norm.mean);
    }
    return out;
}

}  // namespace tsf
