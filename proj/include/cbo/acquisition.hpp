#pragma once

#include "cbo/features.hpp"
#include "cbo/laplace.hpp"
#include "cbo/normal.hpp"
#include "cbo/rng.hpp"
#include "cbo/sampling.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace cbo {

struct AcquisitionConfig {
    double ucb_beta = normal_quantile(0.95);
    int x_restarts = 20;        ///< starts of the multi-start ascent over x
    int quadrature_order = 61;  ///< Gauss-Legendre nodes for E[Phi(f)^2]; odd, >= 21
    int s_grid = 512;           ///< candidate contexts scored before the local polish
    int joint_screen = 256;     ///< Sobol candidates for joint (s, x) BALD
    int ckg_screen = 64;
    int ckg_polish = 3;
    int ckg_max_steps = 30;
    int kg_inner_restarts = 10;
    double kg_refit_tolerance = 1e-11;
    SampleArgmaxOptions sample_argmax;
};

void validate(const AcquisitionConfig& config);

/// A query: context s, parameters x and, for duels, the challenger x2.
struct Decision {
    Vector s;
    Vector x;
    std::optional<Vector> x2;
    double value = 0.0;  ///< acquisition value at the chosen point
    int restarts = 0;
    double wall_seconds = 0.0;

    InputPoint point() const { return x2 ? make_duel(s, x, *x2) : make_point(s, x); }
};

// ---------------------------------------------------------------------------
// Gaussian expectations of the probit link

struct ProbitMoments {
    double mean = 0.5;      ///< E[Phi(f)]
    double variance = 0.0;  ///< V[Phi(f)], clamped at 0
    /// Partial derivatives against the latent mean and latent variance.
    double dmean_dmu = 0.0, dmean_dvar = 0.0, dvar_dmu = 0.0, dvar_dvar = 0.0;
};

/// Moments of Phi(f) for f ~ N(mu, var). E[Phi(f)^2] is the bivariate normal
/// orthant probability, integrated over the arcsine of the correlation.
ProbitMoments moments_of_probit(double mu, double var, int order = 61);

/// E[Phi(f)] + beta sqrt(V[Phi(f)]) at p, with its gradient against the
/// coordinates of p when `grad` is non-null.
double ucb_value(const LaplaceState& state, const InputPoint& p, double beta, Vector* grad = nullptr,
                 int order = 61);

/// Maximiser of ucb_value over x at the fixed context s0.
ArgmaxResult select_x_ucb(const LaplaceState& state, const Vector& s0, const Box& param_box,
                          const AcquisitionConfig& config = {});

// ---------------------------------------------------------------------------
// Mutual information

/// Binary entropy in bits.
double binary_entropy(double p);

/// Approximate I(c; f) in bits for f ~ N(mu, var): h(Phi(mu / sqrt(1 + var)))
/// minus the Gaussian bound on the expected conditional entropy. Clamped at 0,
/// and exactly 0 when var = 0. Derivatives are written when non-null.
double bald_mi(double mu, double var, double* dmu = nullptr, double* dvar = nullptr);

/// bald_mi at the latent moments of p, with the gradient against p's coordinates.
double bald_mi(const LaplaceState& state, const InputPoint& p, Vector* grad = nullptr);

/// Context maximising bald_mi with the parameters of `query` held fixed. A
/// one-dimensional context box is scanned on a grid and polished by Brent's
/// method; wider boxes use Sobol screening and gradient ascent.
ArgmaxResult select_s_bald(const LaplaceState& state, const InputPoint& query, const Box& context_box,
                           const AcquisitionConfig& config = {});

/// bald_mi maximised jointly over (s, x) or, for preference states, (s, x, x2).
Decision select_bald_joint(const LaplaceState& state, const Box& context_box, const Box& param_box,
                           const AcquisitionConfig& config = {});

// ---------------------------------------------------------------------------
// Sampling-based rules

/// Argmax at s0 of one decoupled posterior draw.
ArgmaxResult select_x_ts(const LaplaceState& state, std::shared_ptr<const FeatureMap> map, const Vector& s0,
                         const Box& param_box, RngStream& rng, const AcquisitionConfig& config = {});

/// Argmaxes of two decoupled draws, the second drawn from `rng2`.
std::pair<Vector, Vector> select_duel_kss(const LaplaceState& state, std::shared_ptr<const FeatureMap> map,
                                          const Vector& s0, const Box& param_box, RngStream& rng1,
                                          RngStream& rng2, const AcquisitionConfig& config = {});

/// Champion: posterior-mean argmax of the value function at s0. Challenger:
/// argmax over x of V[Phi(f(s0, champion) - f(s0, x))].
std::pair<Vector, Vector> select_duel_muc(const LaplaceState& state, const Vector& s0, const Box& param_box,
                                          const AcquisitionConfig& config = {});

/// V[Phi] of the duel latent at p, with the gradient against p's coordinates.
double duel_outcome_variance(const LaplaceState& state, const InputPoint& duel, Vector* grad = nullptr,
                             int order = 61);

// ---------------------------------------------------------------------------
// Knowledge gradient

/// One-step knowledge gradient for binary observations, with the inner
/// maximisation of the posterior mean taken over x at the fixed context s0.
class KnowledgeGradient {
public:
    KnowledgeGradient(const LaplaceState& state, const Box& param_box, Vector s0,
                      const AcquisitionConfig& config = {});

    /// max_x mu_t(s0, x) for the current state.
    double current_max() const { return current_max_; }
    const Vector& current_argmax() const { return current_argmax_; }

    /// P(c=1) mu*_1 + P(c=0) mu*_0 - mu*_t for a candidate plain point. Refit
    /// failures score -infinity. The gradient, taken against the candidate's
    /// coordinates with the inner argmaxes held fixed, is written when non-null.
    double value(const InputPoint& candidate, Vector* grad = nullptr) const;

private:
    const LaplaceState& state_;
    Box param_box_;
    Vector s0_;
    AcquisitionConfig config_;
    double current_max_ = 0.0;
    Vector current_argmax_;
};

double kg_binary(const LaplaceState& state, const InputPoint& candidate, const Vector& s0, const Box& param_box,
                 const AcquisitionConfig& config = {});
Vector kg_gradient(const LaplaceState& state, const InputPoint& candidate, const Vector& s0, const Box& param_box,
                   const AcquisitionConfig& config = {});

/// Joint (s, x) maximiser of the knowledge gradient; the inner maximisation
/// uses the upper corner of the context box.
Decision maximize_ckg(const LaplaceState& state, const Box& context_box, const Box& param_box,
                      const AcquisitionConfig& config = {});

// ---------------------------------------------------------------------------
// Rules

/// Everything a rule may read when choosing the next query.
struct AcquisitionProblem {
    const LaplaceState& state;
    Box context_box;
    Box param_box;
    bool preferential = false;
    std::shared_ptr<const FeatureMap> map;  ///< needed by the sampling rules
    AcquisitionConfig config;
};

/// Parameters chosen at a fixed context.
struct ParamChoice {
    Vector x;
    std::optional<Vector> x2;
    double value = 0.0;
};

using XRule = std::function<ParamChoice(const AcquisitionProblem&, const Vector& s0, RngStream&)>;
using ContextRule = std::function<Vector(const AcquisitionProblem&, const ParamChoice&, RngStream&)>;
using Rule = std::function<Decision(const AcquisitionProblem&, RngStream&)>;

XRule ucb_x_rule();
XRule ts_x_rule();
XRule kss_x_rule();
XRule muc_x_rule();
XRule random_x_rule();
ContextRule bald_context_rule();
ContextRule random_context_rule();

/// x chosen by `x_rule` at a context drawn uniformly from the box, then s by
/// `context_rule` given that x.
Rule compose_sequential(XRule x_rule, ContextRule context_rule);

/// Rule by stable identifier: ckg, ucb-ald, ts-ald, kss-ald, muc-ald,
/// ucb-rand-s, ts-rand-s, kss-rand-s, muc-rand-s, bald, random.
Rule rule_from_id(const std::string& id);
const std::vector<std::string>& rule_ids();
/// Whether the rule queries duels (kss, muc) or plain points.
bool rule_is_preferential(const std::string& id);
/// Whether the rule draws posterior samples and needs a feature map.
bool rule_needs_features(const std::string& id);

/// Applies the rule, clamps the query strictly inside the boxes and records wall time.
Decision apply_rule(const Rule& rule, const AcquisitionProblem& problem, RngStream& rng);

}  // namespace cbo
