#pragma once

#include "cbo/kernel.hpp"
#include "cbo/types.hpp"

#include <vector>

namespace cbo {

/// Reduced-rank basis of a stationary kernel: Laplace eigenfunctions on
/// prod_i [-L_i, L_i] around the box center, weighted by the square root of the
/// spectral density at sqrt(eigenvalue). Keeps the `rank` largest weights.
class HilbertBasis {
public:
    HilbertBasis() = default;
    HilbertBasis(const KernelSpec& stationary, const Box& box, int rank, double boundary_factor = 1.25);

    Eigen::Index rank() const { return weights_.size(); }
    Eigen::Index dim() const { return center_.size(); }
    const Vector& weights() const { return weights_; }
    const Vector& half_widths() const { return half_width_; }
    /// Frequency multi-indices, one column per basis function.
    const Eigen::MatrixXi& indices() const { return index_; }

    Vector eval(const Eigen::Ref<const Vector>& z) const;
    /// rank x dim Jacobian; also writes the values when `values` is non-null.
    Matrix jacobian(const Eigen::Ref<const Vector>& z, Vector* values = nullptr) const;

private:
    Vector center_, half_width_, weights_;
    Eigen::MatrixXi index_;
};

/// sqrt of the spectral density of a stationary ARD kernel at angular frequency omega.
double spectral_weight(const KernelSpec& stationary, const Vector& omega);

/// Finite feature map with k(p, q) ~ phi(p)' phi(q) for any KernelSpec:
/// stationary kernels use a HilbertBasis on the joint (s, x) box, product-context
/// kernels the Kronecker product of context and parameter features (s itself for
/// the dot-product context), linear-context-sum kernels [sqrt(theta) s, phi(x)],
/// and preference kernels phi(s, x) - phi(s, x2) for duels.
class FeatureMap {
public:
    FeatureMap() = default;

    Eigen::Index rank() const;
    const KernelSpec& kernel() const { return kernel_; }

    Vector features(const InputPoint& p) const;
    /// rank x p.coord_dim() derivative of features(p).
    Matrix jacobian(const InputPoint& p) const;
    /// n x rank design matrix.
    Matrix design(const std::vector<InputPoint>& points) const;

private:
    friend FeatureMap build_feature_map(const KernelSpec&, const Box&, const Box&, int, int);

    enum class Layout { Joint, ContextDot, ContextKernel, LinearSum };

    Vector plain_features(const Vector& s, const Vector& x, Matrix* jac_s, Matrix* jac_x) const;

    KernelSpec kernel_;
    Layout layout_ = Layout::Joint;
    bool preference_ = false;
    Eigen::Index ds_ = 0, dx_ = 0;
    HilbertBasis param_, context_;
    double sqrt_theta_ = 0.0;
};

/// Default total rank: 128 frequencies per dimension, capped at `max_rank`.
int default_rank(Eigen::Index dim, int per_dim = 128, int max_rank = 1024);

FeatureMap build_feature_map(const KernelSpec& kernel, const Box& context_box, const Box& param_box,
                             int rank_per_dim = 128, int max_rank = 1024);

/// Plain-input form: `box` covers the whole input of a stationary kernel.
inline FeatureMap build_feature_map(const KernelSpec& kernel, const Box& box, int rank) {
    return build_feature_map(kernel, Box(Vector(), Vector()), box, rank, rank);
}

/// phi(s, x_i) - phi(s, x_j) for the preference wrapper of `map`'s kernel.
Vector preference_features(const FeatureMap& map, const Vector& s, const Vector& xi, const Vector& xj);

}  // namespace cbo
