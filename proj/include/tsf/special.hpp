#pragma once

#include <boost/math/special_functions/beta.hpp>

#include <cmath>
#include <stdexcept>

namespace tsf {

/// Upper tail P(F > f) of the F(d1, d2) distribution,
/// I_{d2/(d2 + d1 f)}(d2/2, d1/2) in terms of the regularized incomplete beta.
inline double f_upper_tail(double f, double d1, double d2) {
    if (!(d1 >= 1.0) || !(d2 >= 1.0)) throw std::invalid_argument("F distribution degrees of freedom must be >= 1");
    if (std::isnan(f) || f < 0.0) throw std::invalid_argument("F statistic must be non-negative");
    if (f == 0.0) return 1.0;
    if (std::isinf(f)) return 0.0;
    const double x = d2 / (d2 + d1 * f);
    return boost::math::ibeta(0.5 * d2, 0.5 * d1, x);
}

}  // namespace tsf
