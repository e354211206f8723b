#pragma once

#include "cbo/types.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace cbo {

/// Objective callback: returns f(x) and, when `grad` is non-null, writes df/dx.
using Objective = std::function<double(const Vector& x, Vector* grad)>;

struct AscentOptions {
    int max_iterations = 200;
    double gradient_tolerance = 1e-9;  ///< on the projected gradient, scaled by box width
    double value_tolerance = 1e-14;    ///< relative change that counts as stalled
};

struct AscentResult {
    Vector x;
    double value = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// Projected quasi-Newton ascent on a box: BFGS on the free variables, an
/// active set for bounds whose gradient points outward, and Armijo
/// backtracking along the projected path.
AscentResult maximize_in_box(const Objective& f, const Box& box, const Vector& start,
                             const AscentOptions& options = {});

/// Runs maximize_in_box from every start. Ties keep the earliest start, so
/// put the preferred tie-break point first.
AscentResult maximize_multistart(const Objective& f, const Box& box, const std::vector<Vector>& starts,
                                 const AscentOptions& options = {});

/// `count` points of a scrambled Sobol sequence in the box. The box center is
/// always the first point.
std::vector<Vector> sobol_starts(const Box& box, int count, std::uint64_t scramble_seed = 0);

/// Plain Sobol points (no center prepended), digitally shifted by the seed.
std::vector<Vector> sobol_points(const Box& box, int count, std::uint64_t scramble_seed = 0);

/// Central finite-difference gradient; used for objectives without an analytic gradient.
Vector finite_difference_gradient(const std::function<double(const Vector&)>& f, const Vector& x,
                                  double step = 1e-6);

}  // namespace cbo
