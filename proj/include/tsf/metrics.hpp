#pragma once

#include "tsf/time_series.hpp"

#include <stdexcept>
#include <string>

namespace tsf {

/// Mean of the squared differences over all C*H entries.
template <typename A, typename B>
double mse(const Eigen::MatrixBase<A>& y, const Eigen::MatrixBase<B>& y_hat) {
    if (y.rows() != y_hat.rows() || y.cols() != y_hat.cols()) {
        throw std::invalid_argument("mse: shape mismatch " + std::to_string(y.rows()) + "x" +
                                    std::to_string(y.cols()) + " vs " + std::to_string(y_hat.rows()) + "x" +
                                    std::to_string(y_hat.cols()));
    }
    if (y.size() == 0) throw std::invalid_argument("mse: empty matrices");
    return (y - y_hat).squaredNorm() / static_cast<double>(y.size());
}

}  // namespace tsf
