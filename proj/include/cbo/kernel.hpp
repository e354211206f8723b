#pragma once

#include "cbo/types.hpp"

#include <string>
#include <vector>

namespace cbo {

enum class KernelFamily {
    SquaredExponential,
    Matern32,
    Matern52,
    ProductContext,    ///< k_ctx(s, s') * k(x, x'); k_ctx defaults to the dot product s.s'
    LinearContextSum,  ///< theta * s.s' + k(x, x')
    Preference,        ///< covariance of value differences over duels
};

std::string to_string(KernelFamily family);
KernelFamily kernel_family_from_string(const std::string& name);

/// Covariance function. Stationary families carry lengthscales and a
/// signal variance; composite families nest their factors in `children`
/// (children[0] is the parameter kernel, children[1] the optional context kernel).
struct KernelSpec {
    KernelFamily family = KernelFamily::SquaredExponential;
    Vector lengthscales;
    double variance = 1.0;
    double context_slope = 1.0;
    std::vector<KernelSpec> children;

    bool is_stationary() const;
    const KernelSpec& base() const;
    const KernelSpec* context_kernel() const;
    /// Innermost kernel acting on the parameters x (descends through composites).
    const KernelSpec& parameter_kernel() const;
};

KernelSpec stationary_kernel(KernelFamily family, Vector lengthscales, double variance = 1.0);
KernelSpec squared_exponential(Vector lengthscales, double variance = 1.0);
KernelSpec matern32(Vector lengthscales, double variance = 1.0);
KernelSpec matern52(Vector lengthscales, double variance = 1.0);
KernelSpec product_context(KernelSpec base);
KernelSpec product_context(KernelSpec context, KernelSpec base);
KernelSpec linear_context_sum(double theta, KernelSpec base);
KernelSpec preference(KernelSpec base);

/// Throws std::invalid_argument on non-positive scales or malformed nesting.
void validate(const KernelSpec& spec);

double kernel_eval(const KernelSpec& spec, const InputPoint& p, const InputPoint& q);

/// Gradient of kernel_eval with respect to the coordinates of p, ordered [s, x, x2].
Vector kernel_grad_x(const KernelSpec& spec, const InputPoint& p, const InputPoint& q);

/// Gradient of kernel_eval with respect to log_hyperparameters(spec).
Vector kernel_grad_hyper(const KernelSpec& spec, const InputPoint& p, const InputPoint& q);

/// Positive hyperparameters in log space, depth first: stationary kernels give
/// [log l_1..log l_d, log variance]; linear-context-sum prepends log theta;
/// product-context lists the parameter kernel before the context kernel.
Vector log_hyperparameters(const KernelSpec& spec);
KernelSpec with_log_hyperparameters(const KernelSpec& spec, const Vector& log_params);
std::vector<std::string> hyperparameter_names(const KernelSpec& spec);

/// Gram matrix with `jitter` added to the diagonal.
Matrix gram_matrix(const KernelSpec& spec, const std::vector<InputPoint>& points, double jitter = 0.0);
/// Cross-covariance k(points_i, q).
Vector cross_covariance(const KernelSpec& spec, const std::vector<InputPoint>& points, const InputPoint& q);

/// Diagonal jitter used throughout: 1e-9 times the largest prior variance scale.
double default_jitter(const KernelSpec& spec);

/// Total number of coordinates a point must have for this kernel: checks the
/// layout and throws DimensionError on mismatch.
void check_dimensions(const KernelSpec& spec, const InputPoint& p);

}  // namespace cbo
