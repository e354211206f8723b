#pragma once

#include "cbo/kernel.hpp"
#include "cbo/laplace.hpp"
#include "cbo/types.hpp"

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace cbo {

/// Bounds on positive hyperparameters in natural units, ordered like
/// log_hyperparameters(kernel). Equal bounds pin a parameter.
struct HyperBounds {
    Vector lower;
    Vector upper;
};

struct HyperFitOptions {
    int restarts = 10;
    int max_iterations = 100;
    std::uint64_t seed = 0;
};

class HyperparameterFitError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// GP regression log marginal likelihood of y under k + noise * I. When `grad`
/// is non-null it receives derivatives against [log_hyperparameters(k), log noise].
double gp_regression_log_likelihood(const KernelSpec& kernel, const std::vector<InputPoint>& points, const Vector& y,
                                    double noise_variance, Vector* grad = nullptr);

struct RegressionFit {
    KernelSpec kernel;
    double noise_variance = 0.0;
    double log_likelihood = 0.0;
};

/// Multi-start bound-constrained quasi-Newton on log parameters. The first
/// start is `initial` clamped into the bounds; the rest are uniform in the
/// log box. `bounds` covers the kernel parameters followed by the noise variance.
RegressionFit fit_hyperparameters(const std::vector<InputPoint>& points, const Vector& y, const KernelSpec& initial,
                                  const HyperBounds& bounds, const HyperFitOptions& options = {});

struct ClassificationFit {
    KernelSpec kernel;
    double log_evidence = 0.0;
};

/// Same search on the Laplace evidence of binary data.
ClassificationFit fit_hyperparameters(const std::vector<BinaryObservation>& data, const KernelSpec& initial,
                                      const HyperBounds& bounds, const HyperFitOptions& options = {});

/// Bounds of `[lo, hi]` times each current parameter value.
HyperBounds relative_bounds(const Vector& values, double lo, double hi);

}  // namespace cbo
