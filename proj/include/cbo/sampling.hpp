#pragma once

#include "cbo/features.hpp"
#include "cbo/laplace.hpp"
#include "cbo/rng.hpp"

#include <memory>
#include <vector>

namespace cbo {

enum class SampleFlavor { WeightSpace, Decoupled };

/// Finite-rank posterior draw f(p) = phi(p)' weights + sum_j update_j k(p, anchor_j).
/// The update term is empty for weight-space draws.
struct FunctionSample {
    SampleFlavor flavor = SampleFlavor::WeightSpace;
    std::shared_ptr<const FeatureMap> map;
    Vector weights;
    Vector update;
    std::vector<InputPoint> anchors;
    KernelSpec kernel;

    double operator()(const InputPoint& p) const { return value(p); }
    double value(const InputPoint& p) const;
    /// Value and gradient against the coordinates of p.
    double value_and_gradient(const InputPoint& p, Vector* grad) const;
    /// phi(p)' weights alone.
    double prior_part(const InputPoint& p) const;
};

/// Draw of the latent values at the training points from N(f0, (K^-1 + W)^-1).
Vector sample_training_latents(const LaplaceState& state, RngStream& rng);

/// Two-step weight-space draw: latents y at the training points, then
/// omega ~ N(A^-1 Phi' y, reg^2 A^-1) with A = Phi' Phi + reg^2 I.
FunctionSample sample_weight_space(const LaplaceState& state, std::shared_ptr<const FeatureMap> map, double reg,
                                   RngStream& rng);

/// Decoupled draw: omega ~ N(0, I) plus the kernel-basis update
/// v = K^-1 (y - Phi omega) toward latents y drawn at the training points.
FunctionSample sample_decoupled(const LaplaceState& state, std::shared_ptr<const FeatureMap> map, RngStream& rng);

struct SampleArgmaxOptions {
    int screen = 256;  ///< Sobol candidates scored before polishing
    int polish = 10;   ///< best candidates refined by gradient ascent
    int max_steps = 100;
    std::uint64_t scramble_seed = 0x7a11;
};

/// Maximiser over x of the sample at fixed context s0. Candidate scoring keeps
/// the box center first, so a flat sample returns the center.
ArgmaxResult sample_argmax(const FunctionSample& sample, const Box& box, const Vector& s0,
                           const SampleArgmaxOptions& options = {});

}  // namespace cbo
