#pragma once

#include "tsf/time_series.hpp"

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

namespace tsf {

/// Train/validation/test proportions.
struct SplitSpec {
    std::array<double, 3> ratios{0.7, 0.1, 0.2};

    void validate() const {
        double sum = 0.0;
        for (double r : ratios) {
            if (!(r >= 0.0 && r <= 1.0)) throw std::invalid_argument("split ratio outside [0, 1]");
            sum += r;
        }
        if (std::abs(sum - 1.0) > 1e-9) throw std::invalid_argument("split ratios must sum to 1");
    }
};

struct SplitSeries {
    TimeSeries train;
    TimeSeries val;
    TimeSeries test;
};

/// Contiguous chronological split at explicit boundaries:
/// train = [0, train_end), val = [train_end, val_end), test = [val_end, T).
inline SplitSeries split_at(const TimeSeries& series, Index train_end, Index val_end) {
    const Index T = series.length();
    if (train_end <= 0 || val_end <= train_end || val_end >= T) {
        throw std::invalid_argument("split of series '" + series.name + "' (T=" + std::to_string(T) +
                                    ") at " + std::to_string(train_end) + "/" + std::to_string(val_end) +
                                    " leaves an empty segment");
    }
    return SplitSeries{series.slice(0, train_end), series.slice(train_end, val_end), series.slice(val_end, T)};
}

/// Ratio split with boundaries floor(T*r_train) and floor(T*(r_train + r_val)).
/// A boundary within 1e-7 below an integer counts as that integer, so ratios
/// such as 0.7 + 0.1 are not lost to binary rounding.
inline SplitSeries split_series(const TimeSeries& series, const SplitSpec& spec = {}) {
    spec.validate();
    const auto T = static_cast<double>(series.length());
    const auto boundary = [](double x) { return static_cast<Index>(std::floor(x + 1e-7)); };
    const Index train_end = boundary(T * spec.ratios[0]);
    const Index val_end = boundary(T * (spec.ratios[0] + spec.ratios[1]));
    return split_at(series, train_end, val_end);
}

/// Number of (query, answer) windows of a segment of length `length`.
constexpr Index window_count(Index length, Index lookback, Index horizon, Index stride) noexcept {
    if (length < lookback + horizon) return 0;
    return (length - lookback - horizon) / stride + 1;
}

/// Sliding (X, Y) pairs over one split segment.
///
/// Samples are materialized on demand: sample i has X = columns
/// [i*stride, i*stride + L) and Y = the H columns that follow.
class WindowedDataset {
public:
    struct Sample {
        Matrix X;
        Matrix Y;
    };

    WindowedDataset(Matrix segment, Index lookback, Index horizon, Index stride = 1)
        : segment_(std::move(segment)), lookback_(lookback), horizon_(horizon), stride_(stride) {
        if (lookback < 1 || horizon < 1 || stride < 1) {
            throw std::invalid_argument("window lookback, horizon and stride must be positive");
        }
    }

    [[nodiscard]] Index lookback() const noexcept { return lookback_; }
    [[nodiscard]] Index horizon() const noexcept { return horizon_; }
    [[nodiscard]] Index stride() const noexcept { return stride_; }
    [[nodiscard]] Index channels() const noexcept { return segment_.rows(); }
    [[nodiscard]] Index size() const noexcept { return window_count(segment_.cols(), lookback_, horizon_, stride_); }
    [[nodiscard]] bool empty() const noexcept { return size() == 0; }
    [[nodiscard]] const Matrix& segment() const noexcept { return segment_; }

    /// First column of sample i within the segment.
    [[nodiscard]] Index start(Index i) const noexcept { return i * stride_; }

    [[nodiscard]] auto query(Index i) const { return segment_.middleCols(start(i), lookback_); }
    [[nodiscard]] auto answer(Index i) const { return segment_.middleCols(start(i) + lookback_, horizon_); }

    [[nodiscard]] Sample sample(Index i) const {
        if (i < 0 || i >= size()) throw std::out_of_range("window index " + std::to_string(i) + " out of range");
        return Sample{query(i), answer(i)};
    }

private:
    Matrix segment_;
    Index lookback_;
    Index horizon_;
    Index stride_;
};

inline WindowedDataset make_windows(const TimeSeries& segment, Index lookback, Index horizon, Index stride = 1) {
    return WindowedDataset(segment.values, lookback, horizon, stride);
}

}  // namespace tsf
