#pragma once

#include "cbo/normal.hpp"

namespace cbo {

/// ln p(c | f) for the probit likelihood and its derivatives in f.
struct ProbitDerivatives {
    double value;
    double d1;
    double d2;
    double d3;  ///< third derivative, used by the evidence gradient
};

inline ProbitDerivatives probit_loglik_derivs(int c, double f) {
    const double y = c == 1 ? 1.0 : -1.0;
    const double z = y * f;
    const double r = normal_hazard(z);
    const double g2 = -r * (r + z);
    const double g3 = -r - g2 * (2.0 * r + z);
    return {log_normal_cdf(z), y * r, g2, y * g3};
}

}  // namespace cbo
