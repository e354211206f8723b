#pragma once

#include "cbo/kernel.hpp"
#include "cbo/optimize.hpp"
#include "cbo/types.hpp"

#include <vector>

namespace cbo {

struct LaplaceOptions {
    double tolerance = 1e-10;  ///< on ||f - K grad||_inf, times max(1, max_i K_ii)
    int max_iterations = 100;
    double jitter = -1.0;  ///< negative: default_jitter(kernel)
    /// When set, receives ln p(c|f) - a'f/2 after every accepted step.
    std::vector<double>* objective_trace = nullptr;
};

struct PredictiveDistribution {
    double mean = 0.0;
    double variance = 0.0;
    double class_probability = 0.5;
};

class LaplaceState;

LaplaceState fit_laplace(std::vector<BinaryObservation> data, const KernelSpec& kernel,
                         const LaplaceOptions& options = {}, const Vector* initial_alpha = nullptr);

/// Fitted Laplace approximation of a probit GP classifier. Immutable once
/// built; prediction is const and safe to call concurrently.
class LaplaceState {
public:
    /// Posterior with no observations (the prior).
    static LaplaceState prior(KernelSpec kernel);

    const std::vector<BinaryObservation>& data() const { return data_; }
    const std::vector<InputPoint>& points() const { return points_; }
    const KernelSpec& kernel() const { return kernel_; }
    Eigen::Index size() const { return static_cast<Eigen::Index>(data_.size()); }
    bool empty() const { return data_.empty(); }

    /// Latent mode f0 at the training points.
    const Vector& mode() const { return mode_; }
    /// K^{-1} f0, the weights of the posterior mean.
    const Vector& alpha() const { return alpha_; }
    /// grad_f ln p(c | f) at the mode.
    const Vector& gradient() const { return gradient_; }
    /// Negative likelihood Hessian diagonal W.
    const Vector& w() const { return w_; }
    /// Training covariance including jitter.
    const Matrix& gram() const { return gram_; }
    /// Lower Cholesky factor of B = I + W^1/2 K W^1/2.
    const Matrix& chol_b() const { return chol_b_; }
    double jitter() const { return jitter_; }
    double log_evidence() const { return log_evidence_; }
    double residual() const { return residual_; }
    int iterations() const { return iterations_; }

    double mean(const InputPoint& p) const;
    PredictiveDistribution predict(const InputPoint& p) const;

    /// Latent mean and variance with their gradients against the coordinates
    /// of p ([s, x, x2]); gradient outputs may be null.
    void latent_with_gradient(const InputPoint& p, double& mean, double& variance, Vector* dmean,
                              Vector* dvariance) const;

    /// Laplace posterior covariance of the latents at the training points, (K^-1 + W)^-1.
    Matrix posterior_covariance() const;

private:
    friend LaplaceState fit_laplace(std::vector<BinaryObservation>, const KernelSpec&, const LaplaceOptions&,
                                    const Vector*);

    std::vector<BinaryObservation> data_;
    std::vector<InputPoint> points_;
    KernelSpec kernel_;
    Vector mode_, alpha_, gradient_, w_, sqrt_w_;
    Matrix gram_, chol_b_;
    double jitter_ = 0.0;
    double log_evidence_ = 0.0;
    double residual_ = 0.0;
    int iterations_ = 0;
};

/// Newton iteration for the posterior mode in the B = I + W^1/2 K W^1/2 form,
/// with step halving whenever the unnormalised log posterior would decrease.
/// `initial_alpha` warm-starts the iteration at f = K * initial_alpha; entries
/// beyond its length start at zero. Throws ConvergenceError when the iteration
/// budget runs out.
LaplaceState fit_laplace(std::vector<BinaryObservation> data, const KernelSpec& kernel,
                         const LaplaceOptions& options, const Vector* initial_alpha);

/// Refit with one more observation, warm-started from `state`.
LaplaceState fit_laplace_extended(const LaplaceState& state, const BinaryObservation& extra,
                                  const LaplaceOptions& options = {});

inline double predict_class_prob(const LaplaceState& state, const InputPoint& p) {
    return state.predict(p).class_probability;
}

/// ln p(c|f0) - f0' K^-1 f0 / 2 - ln|B| / 2.
inline double log_marginal_likelihood(const LaplaceState& state) { return state.log_evidence(); }

/// Gradient of the Laplace evidence against log_hyperparameters(state.kernel()).
Vector log_evidence_gradient(const LaplaceState& state);

struct MeanArgmaxOptions {
    int restarts = 20;
    int max_steps = 200;
    int data_starts = 5;  ///< best-scoring training locations added as extra starts
    std::uint64_t scramble_seed = 0x5eed;
};

struct ArgmaxResult {
    Vector x;
    double value = 0.0;
};

/// Maximiser of the posterior mean over x at fixed context s0. The box center
/// is the first start, so a flat mean returns the center.
ArgmaxResult posterior_mean_argmax(const LaplaceState& state, const Vector& s0, const Box& box,
                                   const MeanArgmaxOptions& options = {});

/// Same, with caller-supplied extra starts tried after the default ones.
ArgmaxResult posterior_mean_argmax(const LaplaceState& state, const Vector& s0, const Box& box,
                                   const MeanArgmaxOptions& options, const std::vector<Vector>& extra_starts);

}  // namespace cbo
