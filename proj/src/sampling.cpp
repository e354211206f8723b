#include "cbo/sampling.hpp"

#include "cbo/optimize.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <numeric>

namespace cbo {

namespace {

// Square root factor S with S S' = Sigma: Cholesky, retried with growing
// jitter, then a clipped eigendecomposition.
Matrix covariance_factor(const Matrix& sigma, double jitter) {
    const auto n = sigma.rows();
    double eps = 0.0;
    for (int attempt = 0; attempt < 4; ++attempt) {
        Matrix S = sigma;
        S.diagonal().array() += eps;
        Eigen::LLT<Matrix> llt(S);
        if (llt.info() == Eigen::Success) return llt.matrixL();
        eps = eps == 0.0 ? std::max(jitter, 1e-12) : 10.0 * eps;
    }
    Eigen::SelfAdjointEigenSolver<Matrix> eig(sigma);
    const Vector root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    Matrix F = eig.eigenvectors() * root.asDiagonal();
    (void)n;
    return F;
}

}  // namespace

double FunctionSample::prior_part(const InputPoint& p) const { return map->features(p).dot(weights); }

double FunctionSample::value(const InputPoint& p) const {
    double v = prior_part(p);
    if (update.size()) v += cross_covariance(kernel, anchors, p).dot(update);
    return v;
}

double FunctionSample::value_and_gradient(const InputPoint& p, Vector* grad) const {
    if (!grad) return value(p);
    *grad = map->jacobian(p).transpose() * weights;
    double v = prior_part(p);
    for (std::size_t j = 0; j < anchors.size(); ++j) {
        const double u = update[static_cast<Eigen::Index>(j)];
        v += u * kernel_eval(kernel, p, anchors[j]);
        *grad += u * kernel_grad_x(kernel, p, anchors[j]);
    }
    return v;
}

Vector sample_training_latents(const LaplaceState& state, RngStream& rng) {
    const auto n = state.size();
    if (n == 0) return Vector();
    const Matrix F = covariance_factor(state.posterior_covariance(), state.jitter());
    return state.mode() + F * rng.normal_vector(F.cols());
}

FunctionSample sample_weight_space(const LaplaceState& state, std::shared_ptr<const FeatureMap> map, double reg,
                                   RngStream& rng) {
    if (!(reg > 0.0)) throw std::invalid_argument("regularisation must be positive");
    FunctionSample out;
    out.flavor = SampleFlavor::WeightSpace;
    out.kernel = state.kernel();
    const auto R = map->rank();
    const Vector y = sample_training_latents(state, rng);
    const Vector xi = rng.normal_vector(R);
    if (state.empty()) {
        out.weights = xi;
    } else {
        const Matrix Phi = map->design(state.points());
        Matrix A = Phi.transpose() * Phi;
        A.diagonal().array() += reg * reg;
        const Eigen::LLT<Matrix> llt(A);
        Vector noise = xi;
        llt.matrixU().solveInPlace(noise);  // L_A^{-T} xi
        out.weights = llt.solve(Phi.transpose() * y) + reg * noise;
    }
    out.map = std::move(map);
    return out;
}

FunctionSample sample_decoupled(const LaplaceState& state, std::shared_ptr<const FeatureMap> map, RngStream& rng) {
    FunctionSample out;
    out.flavor = SampleFlavor::Decoupled;
    out.kernel = state.kernel();
    const Vector y = sample_training_latents(state, rng);
    out.weights = rng.normal_vector(map->rank());
    if (!state.empty()) {
        const Matrix Phi = map->design(state.points());
        const Eigen::LLT<Matrix> llt(state.gram());
        if (llt.info() != Eigen::Success) throw std::runtime_error("training covariance is not positive definite");
        out.update = llt.solve(y - Phi * out.weights);
        out.anchors = state.points();
    }
    out.map = std::move(map);
    return out;
}

ArgmaxResult sample_argmax(const FunctionSample& sample, const Box& box, const Vector& s0,
                           const SampleArgmaxOptions& options) {
    const auto ds = s0.size();
    const auto dx = box.dim();
    const Objective objective = [&](const Vector& x, Vector* grad) {
        const InputPoint p = make_point(s0, x);
        if (!grad) return sample.value(p);
        Vector g;
        const double v = sample.value_and_gradient(p, &g);
        *grad = g.segment(ds, dx);
        return v;
    };
    const std::vector<Vector> candidates = sobol_starts(box, std::max(1, options.screen), options.scramble_seed);
    std::vector<double> score(candidates.size());
    for (std::size_t i = 0; i < candidates.size(); ++i) score[i] = objective(candidates[i], nullptr);
    std::vector<std::size_t> order(candidates.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return score[a] > score[b]; });
    std::vector<Vector> starts;
    for (std::size_t i = 0; i < order.size() && static_cast<int>(i) < options.polish; ++i)
        starts.push_back(candidates[order[i]]);
    AscentOptions ascent;
    ascent.max_iterations = options.max_steps;
    const AscentResult r = maximize_multistart(objective, box, starts, ascent);
    return {r.x, r.value};
}

}  // namespace cbo
