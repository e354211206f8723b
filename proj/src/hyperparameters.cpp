#include "cbo/hyperparameters.hpp"

#include "cbo/optimize.hpp"
#include "cbo/rng.hpp"

#include <cmath>
#include <future>
#include <limits>
#include <numbers>

namespace cbo {

namespace {

Box log_box(const HyperBounds& b) {
    if (b.lower.size() != b.upper.size()) throw DimensionError("hyperparameter bounds differ in length");
    if (!(b.lower.array() > 0.0).all() || !(b.upper.array() >= b.lower.array()).all())
        throw std::invalid_argument("hyperparameter bounds must satisfy 0 < lower <= upper");
    return Box(b.lower.array().log().matrix(), b.upper.array().log().matrix());
}

struct Candidate {
    Vector theta;
    double value = -std::numeric_limits<double>::infinity();
};

// Runs every start concurrently; the reduction is in start order so the result
// does not depend on scheduling.
Candidate multistart(const Objective& objective, const Box& box, const Vector& initial, const HyperFitOptions& opt) {
    std::vector<Vector> starts{box.clamp(initial)};
    RngStream rng(opt.seed, "hyperparameter-starts");
    for (int i = 1; i < opt.restarts; ++i) starts.push_back(rng.uniform_in(box));

    AscentOptions ascent;
    ascent.max_iterations = opt.max_iterations;
    ascent.gradient_tolerance = 1e-6;
    ascent.value_tolerance = 1e-12;
    std::vector<std::future<AscentResult>> jobs;
    for (const Vector& s : starts)
        jobs.push_back(std::async(std::launch::async, [&, s] {
            try {
                return maximize_in_box(objective, box, s, ascent);
            } catch (const std::exception&) {
                AscentResult failed;
                failed.x = s;
                failed.value = -std::numeric_limits<double>::infinity();
                return failed;
            }
        }));
    Candidate best;
    for (auto& j : jobs) {
        const AscentResult r = j.get();
        if (std::isfinite(r.value) && r.value > best.value) best = {r.x, r.value};
    }
    if (!std::isfinite(best.value)) throw HyperparameterFitError("no hyperparameter start produced a finite objective");
    return best;
}

// Objective wrapper that reports failures as -inf instead of throwing.
template <typename F>
Objective guarded(F f) {
    return [f](const Vector& theta, Vector* grad) {
        try {
            const double v = f(theta, grad);
            if (!std::isfinite(v) || (grad && !grad->allFinite())) return -std::numeric_limits<double>::infinity();
            return v;
        } catch (const std::exception&) {
            return -std::numeric_limits<double>::infinity();
        }
    };
}

}  // namespace

double gp_regression_log_likelihood(const KernelSpec& kernel, const std::vector<InputPoint>& points, const Vector& y,
                                    double noise_variance, Vector* grad) {
    const auto n = static_cast<Eigen::Index>(points.size());
    if (y.size() != n) throw DimensionError("targets and points differ in length");
    const Matrix K = gram_matrix(kernel, points, noise_variance + default_jitter(kernel));
    const Eigen::LLT<Matrix> llt(K);
    if (llt.info() != Eigen::Success) throw std::runtime_error("regression covariance is not positive definite");
    const Vector alpha = llt.solve(y);
    const Matrix& L = llt.matrixLLT();
    const double logdet = 2.0 * L.diagonal().array().log().sum();
    const double value = -0.5 * y.dot(alpha) - 0.5 * logdet - 0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);
    if (grad) {
        const Matrix Kinv = llt.solve(Matrix::Identity(n, n));
        const auto P = log_hyperparameters(kernel).size();
        grad->setZero(P + 1);
        // d/dtheta = 1/2 tr((alpha alpha' - K^-1) dK/dtheta)
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = 0; j <= i; ++j) {
                const double weight = (i == j ? 0.5 : 1.0) * (alpha[i] * alpha[j] - Kinv(i, j));
                grad->head(P) += weight * kernel_grad_hyper(kernel, points[static_cast<std::size_t>(i)],
                                                            points[static_cast<std::size_t>(j)]);
            }
        }
        (*grad)[P] = 0.5 * noise_variance * (alpha.squaredNorm() - Kinv.trace());
    }
    return value;
}

RegressionFit fit_hyperparameters(const std::vector<InputPoint>& points, const Vector& y, const KernelSpec& initial,
                                  const HyperBounds& bounds, const HyperFitOptions& options) {
    validate(initial);
    const Vector theta0 = log_hyperparameters(initial);
    const Box box = log_box(bounds);
    if (box.dim() != theta0.size() + 1) throw DimensionError("regression bounds must cover kernel parameters and noise");
    Vector start(box.dim());
    start << theta0, box.center()[theta0.size()];

    const auto P = theta0.size();
    const Objective objective = guarded([&](const Vector& th, Vector* grad) {
        return gp_regression_log_likelihood(with_log_hyperparameters(initial, th.head(P)), points, y,
                                            std::exp(th[P]), grad);
    });
    const Candidate best = multistart(objective, box, start, options);
    return {with_log_hyperparameters(initial, best.theta.head(P)), std::exp(best.theta[P]), best.value};
}

ClassificationFit fit_hyperparameters(const std::vector<BinaryObservation>& data, const KernelSpec& initial,
                                      const HyperBounds& bounds, const HyperFitOptions& options) {
    validate(initial);
    const Vector theta0 = log_hyperparameters(initial);
    const Box box = log_box(bounds);
    if (box.dim() != theta0.size()) throw DimensionError("classification bounds must cover the kernel parameters");
    const Objective objective = guarded([&](const Vector& th, Vector* grad) {
        const LaplaceState st = fit_laplace(data, with_log_hyperparameters(initial, th));
        if (grad) *grad = log_evidence_gradient(st);
        return st.log_evidence();
    });
    const Candidate best = multistart(objective, box, theta0, options);
    return {with_log_hyperparameters(initial, best.theta), best.value};
}

HyperBounds relative_bounds(const Vector& values, double lo, double hi) {
    return {lo * values, hi * values};
}

}  // namespace cbo
