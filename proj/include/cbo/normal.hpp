#pragma once

#include <boost/math/special_functions/erf.hpp>

#include <cmath>
#include <numbers>

namespace cbo {

// Standard normal helpers. Tail behaviour matters: confident observations put
// the probit argument far into the negative tail, where Phi underflows long
// before phi / Phi does.

template <typename Scalar>
Scalar normal_pdf(Scalar z) {
    return std::exp(Scalar(-0.5) * z * z) / std::sqrt(Scalar(2) * std::numbers::pi_v<Scalar>);
}

template <typename Scalar>
Scalar normal_cdf(Scalar z) {
    return Scalar(0.5) * std::erfc(-z / std::numbers::sqrt2_v<Scalar>);
}

template <typename Scalar>
Scalar normal_quantile(Scalar p) {
    return -std::numbers::sqrt2_v<Scalar> * boost::math::erfc_inv(Scalar(2) * p);
}

namespace detail {

/// Phi(z) / phi(z) for z <= -6 by the Laplace continued fraction of the Mills ratio.
template <typename Scalar>
Scalar mills_ratio_lower_tail(Scalar z) {
    const Scalar t = -z;
    Scalar frac = t;
    for (int k = 80; k >= 1; --k) frac = t + Scalar(k) / frac;
    return Scalar(1) / frac;
}

inline constexpr double kTailSwitch = -6.0;

}  // namespace detail

template <typename Scalar>
Scalar log_normal_cdf(Scalar z) {
    if (z > Scalar(0)) return std::log1p(-normal_cdf(-z));
    if (z > Scalar(detail::kTailSwitch)) return std::log(normal_cdf(z));
    return Scalar(-0.5) * z * z - Scalar(0.5) * std::log(Scalar(2) * std::numbers::pi_v<Scalar>) +
           std::log(detail::mills_ratio_lower_tail(z));
}

/// phi(z) / Phi(z), finite for every finite z (approaches -z in the lower tail).
template <typename Scalar>
Scalar normal_hazard(Scalar z) {
    if (z > Scalar(detail::kTailSwitch)) return normal_pdf(z) / normal_cdf(z);
    return Scalar(1) / detail::mills_ratio_lower_tail(z);
}

}  // namespace cbo
