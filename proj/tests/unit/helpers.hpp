#pragma once

#include "cbo/kernel.hpp"
#include "cbo/rng.hpp"
#include "cbo/types.hpp"

#include <doctest.h>

#include <cmath>
#include <vector>

namespace cbo::test {

inline double rel_err(double a, double b, double floor = 1e-12) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

inline double rel_err(const Vector& a, const Vector& b, double floor = 1e-12) {
    return (a - b).norm() / std::max({a.norm(), b.norm(), floor});
}

inline Vector uniform_vector(RngStream& rng, Eigen::Index n, double lo, double hi) {
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = lo + (hi - lo) * rng.uniform();
    return v;
}

/// Observations at random (s, x) with outcomes drawn from Phi(s * g(x)) for a smooth g.
inline std::vector<BinaryObservation> random_contextual_data(RngStream& rng, int n, Eigen::Index ds, Eigen::Index dx) {
    std::vector<BinaryObservation> data;
    for (int i = 0; i < n; ++i) {
        Vector s = uniform_vector(rng, ds, 0.0, 1.0);
        Vector x = uniform_vector(rng, dx, -1.0, 1.0);
        const double g = 2.0 * std::cos(2.0 * x.sum()) - x.squaredNorm();
        const double z = (ds ? s.sum() : 1.0) * g;
        const int c = rng.uniform() < 0.5 * std::erfc(-z / std::sqrt(2.0)) ? 1 : 0;
        data.push_back({make_point(std::move(s), std::move(x)), c});
    }
    return data;
}

}  // namespace cbo::test
