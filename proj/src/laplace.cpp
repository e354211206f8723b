#include "cbo/laplace.hpp"

#include "cbo/normal.hpp"
#include "cbo/probit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace cbo {

namespace {

struct LikelihoodTerms {
    double log_lik = 0.0;
    Vector d1, w;
};

LikelihoodTerms likelihood_terms(const std::vector<BinaryObservation>& data, const Vector& f) {
    LikelihoodTerms t;
    const auto n = f.size();
    t.d1.resize(n);
    t.w.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const ProbitDerivatives d = probit_loglik_derivs(data[static_cast<std::size_t>(i)].outcome, f[i]);
        t.log_lik += d.value;
        t.d1[i] = d.d1;
        t.w[i] = std::max(-d.d2, 0.0);
    }
    return t;
}

double log_likelihood(const std::vector<BinaryObservation>& data, const Vector& f) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < f.size(); ++i)
        s += probit_loglik_derivs(data[static_cast<std::size_t>(i)].outcome, f[i]).value;
    return s;
}

Matrix chol_lower(const Matrix& B) {
    Eigen::LLT<Matrix> llt(B);
    if (llt.info() != Eigen::Success) throw ConvergenceError("B = I + W^1/2 K W^1/2 is not positive definite", 0.0);
    return llt.matrixL();
}

}  // namespace

LaplaceState LaplaceState::prior(KernelSpec kernel) {
    validate(kernel);
    LaplaceState s;
    s.kernel_ = std::move(kernel);
    s.jitter_ = default_jitter(s.kernel_);
    return s;
}

LaplaceState fit_laplace(std::vector<BinaryObservation> data, const KernelSpec& kernel, const LaplaceOptions& options,
                         const Vector* initial_alpha) {
    validate(kernel);
    for (const auto& obs : data) {
        if (obs.outcome != 0 && obs.outcome != 1) throw std::invalid_argument("outcome must be 0 or 1");
        check_dimensions(kernel, obs.point);
    }
    if (data.empty()) return LaplaceState::prior(kernel);

    LaplaceState st;
    st.kernel_ = kernel;
    st.jitter_ = options.jitter < 0.0 ? default_jitter(kernel) : options.jitter;
    st.points_.reserve(data.size());
    for (const auto& obs : data) st.points_.push_back(obs.point);
    st.data_ = std::move(data);

    const auto n = static_cast<Eigen::Index>(st.data_.size());
    const Matrix K = gram_matrix(kernel, st.points_, st.jitter_);

    Vector a = Vector::Zero(n);
    if (initial_alpha) {
        const auto m = std::min(n, initial_alpha->size());
        a.head(m) = initial_alpha->head(m);
    }
    Vector f = K * a;
    double psi = -0.5 * a.dot(f) + log_likelihood(st.data_, f);
    if (!std::isfinite(psi)) {
        a.setZero();
        f.setZero();
        psi = log_likelihood(st.data_, f);
    }
    if (options.objective_trace) options.objective_trace->assign(1, psi);

    LikelihoodTerms terms = likelihood_terms(st.data_, f);
    double residual = (f - K * terms.d1).lpNorm<Eigen::Infinity>();
    const double tolerance = options.tolerance * std::max(1.0, K.diagonal().maxCoeff());
    int it = 0;
    Matrix L;
    Vector sw;
    while (residual >= tolerance && it < options.max_iterations) {
        ++it;
        sw = terms.w.cwiseSqrt();
        Matrix B = sw.asDiagonal() * K * sw.asDiagonal();
        B.diagonal().array() += 1.0;
        L = chol_lower(B);
        const Vector b = terms.w.cwiseProduct(f) + terms.d1;
        Vector c = sw.cwiseProduct(K * b);
        L.triangularView<Eigen::Lower>().solveInPlace(c);
        L.transpose().triangularView<Eigen::Upper>().solveInPlace(c);
        const Vector a_newton = b - sw.cwiseProduct(c);
        const Vector da = a_newton - a;

        double t = 1.0;
        bool improved = false;
        for (int halving = 0; halving < 40; ++halving) {
            const Vector a_try = a + t * da;
            const Vector f_try = K * a_try;
            const double psi_try = -0.5 * a_try.dot(f_try) + log_likelihood(st.data_, f_try);
            if (std::isfinite(psi_try) && psi_try >= psi - 1e-12 * (1.0 + std::abs(psi))) {
                a = a_try;
                f = f_try;
                psi = std::max(psi, psi_try);
                improved = true;
                if (options.objective_trace) options.objective_trace->push_back(psi_try);
                break;
            }
            t *= 0.5;
        }
        terms = likelihood_terms(st.data_, f);
        residual = (f - K * terms.d1).lpNorm<Eigen::Infinity>();
        if (!improved) break;
    }
    if (residual >= tolerance)
        throw ConvergenceError("Laplace mode search stopped after " + std::to_string(it) +
                                   " iterations with residual " + std::to_string(residual),
                               residual);

    st.mode_ = f;
    st.alpha_ = a;
    st.gradient_ = terms.d1;
    st.w_ = terms.w;
    st.sqrt_w_ = terms.w.cwiseSqrt();
    Matrix B = st.sqrt_w_.asDiagonal() * K * st.sqrt_w_.asDiagonal();
    B.diagonal().array() += 1.0;
    st.chol_b_ = chol_lower(B);
    st.gram_ = K;
    st.residual_ = residual;
    st.iterations_ = it;
    st.log_evidence_ = -0.5 * a.dot(f) + terms.log_lik - st.chol_b_.diagonal().array().log().sum();
    return st;
}

LaplaceState fit_laplace_extended(const LaplaceState& state, const BinaryObservation& extra,
                                  const LaplaceOptions& options) {
    std::vector<BinaryObservation> data = state.data();
    data.push_back(extra);
    Vector warm = Vector::Zero(state.size() + 1);
    if (!state.empty()) warm.head(state.size()) = state.alpha();
    return fit_laplace(std::move(data), state.kernel(), options, &warm);
}

double LaplaceState::mean(const InputPoint& p) const {
    if (empty()) {
        check_dimensions(kernel_, p);
        return 0.0;
    }
    return cross_covariance(kernel_, points_, p).dot(alpha_);
}

PredictiveDistribution LaplaceState::predict(const InputPoint& p) const {
    PredictiveDistribution out;
    latent_with_gradient(p, out.mean, out.variance, nullptr, nullptr);
    out.class_probability = normal_cdf(out.mean / std::sqrt(1.0 + out.variance));
    return out;
}

void LaplaceState::latent_with_gradient(const InputPoint& p, double& mu, double& var, Vector* dmu,
                                        Vector* dvar) const {
    check_dimensions(kernel_, p);
    const double prior_var = kernel_eval(kernel_, p, p);
    const auto n = size();
    const auto dim = p.coord_dim();
    Vector k(n);
    Matrix dk(dim, n);
    const bool want_grad = dmu || dvar;
    for (Eigen::Index i = 0; i < n; ++i) {
        const InputPoint& q = points_[static_cast<std::size_t>(i)];
        k[i] = kernel_eval(kernel_, p, q);
        if (want_grad) dk.col(i) = kernel_grad_x(kernel_, p, q);
    }
    mu = n ? k.dot(alpha_) : 0.0;
    Vector v = sqrt_w_.cwiseProduct(k);
    if (n) chol_b_.triangularView<Eigen::Lower>().solveInPlace(v);
    var = std::max(prior_var - v.squaredNorm(), 0.0);
    if (dmu) *dmu = n ? Vector(dk * alpha_) : Vector::Zero(dim);
    if (dvar) {
        // d k(p,p) / dp = 2 * grad of the first argument at q = p, by symmetry.
        *dvar = 2.0 * kernel_grad_x(kernel_, p, p);
        if (n) {
            Vector z = v;
            chol_b_.transpose().triangularView<Eigen::Upper>().solveInPlace(z);
            z = sqrt_w_.cwiseProduct(z);
            *dvar -= 2.0 * dk * z;
        }
    }
}

Matrix LaplaceState::posterior_covariance() const {
    if (empty()) return Matrix(0, 0);
    Matrix C = sqrt_w_.asDiagonal() * gram_;
    chol_b_.triangularView<Eigen::Lower>().solveInPlace(C);
    Matrix S = gram_ - C.transpose() * C;
    return 0.5 * (S + S.transpose());
}

Vector log_evidence_gradient(const LaplaceState& state) {
    const KernelSpec& kernel = state.kernel();
    const auto P = log_hyperparameters(kernel).size();
    const auto n = state.size();
    if (n == 0) return Vector::Zero(P);

    const auto& pts = state.points();
    std::vector<Matrix> dK(static_cast<std::size_t>(P), Matrix(n, n));
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j <= i; ++j) {
            const Vector h = kernel_grad_hyper(kernel, pts[static_cast<std::size_t>(i)], pts[static_cast<std::size_t>(j)]);
            for (Eigen::Index k = 0; k < P; ++k) {
                dK[static_cast<std::size_t>(k)](i, j) = h[k];
                dK[static_cast<std::size_t>(k)](j, i) = h[k];
            }
        }
    }

    const Matrix& K = state.gram();
    const Matrix& L = state.chol_b();
    const Vector sw = state.w().cwiseSqrt();
    // R = W^1/2 B^-1 W^1/2
    Matrix R = sw.asDiagonal() * Matrix::Identity(n, n);
    L.triangularView<Eigen::Lower>().solveInPlace(R);
    L.transpose().triangularView<Eigen::Upper>().solveInPlace(R);
    R = sw.asDiagonal() * R.eval();
    Matrix C = sw.asDiagonal() * K;
    L.triangularView<Eigen::Lower>().solveInPlace(C);

    Vector d3(n);
    for (Eigen::Index i = 0; i < n; ++i)
        d3[i] = probit_loglik_derivs(state.data()[static_cast<std::size_t>(i)].outcome, state.mode()[i]).d3;
    // Implicit dependence of the mode on the hyperparameters.
    const Vector s2 = 0.5 * (K.diagonal() - C.colwise().squaredNorm().transpose()).cwiseProduct(d3);

    const Vector& a = state.alpha();
    const Vector& g = state.gradient();
    Vector out(P);
    for (Eigen::Index k = 0; k < P; ++k) {
        const Matrix& Ck = dK[static_cast<std::size_t>(k)];
        const double s1 = 0.5 * a.dot(Ck * a) - 0.5 * R.cwiseProduct(Ck).sum();
        const Vector b = Ck * g;
        const Vector s3 = b - K * (R * b);
        out[k] = s1 + s2.dot(s3);
    }
    return out;
}

ArgmaxResult posterior_mean_argmax(const LaplaceState& state, const Vector& s0, const Box& box,
                                   const MeanArgmaxOptions& options) {
    return posterior_mean_argmax(state, s0, box, options, {});
}

ArgmaxResult posterior_mean_argmax(const LaplaceState& state, const Vector& s0, const Box& box,
                                   const MeanArgmaxOptions& options, const std::vector<Vector>& extra_starts) {
    const auto ds = s0.size();
    const auto dx = box.dim();
    const auto n = state.size();
    const auto& pts = state.points();
    const KernelSpec& kernel = state.kernel();
    const Vector& alpha = state.alpha();

    const Objective objective = [&](const Vector& x, Vector* grad) {
        const InputPoint p = make_point(s0, x);
        double mu = 0.0;
        if (grad) grad->setZero(dx);
        for (Eigen::Index i = 0; i < n; ++i) {
            const InputPoint& q = pts[static_cast<std::size_t>(i)];
            mu += alpha[i] * kernel_eval(kernel, p, q);
            if (grad) *grad += alpha[i] * kernel_grad_x(kernel, p, q).segment(ds, dx);
        }
        return mu;
    };

    std::vector<Vector> starts = sobol_starts(box, options.restarts, options.scramble_seed);
    if (options.data_starts > 0 && n > 0) {
        std::vector<std::pair<double, Vector>> scored;
        for (const auto& q : pts) {
            if (q.x.size() != dx) continue;
            for (const Vector* cand : {&q.x, q.x2 ? &*q.x2 : nullptr}) {
                if (!cand) continue;
                const Vector x = box.clamp(*cand);
                scored.emplace_back(objective(x, nullptr), x);
            }
        }
        std::stable_sort(scored.begin(), scored.end(),
                         [](const auto& l, const auto& r) { return l.first > r.first; });
        for (std::size_t i = 0; i < scored.size() && i < static_cast<std::size_t>(options.data_starts); ++i)
            starts.push_back(scored[i].second);
    }
    starts.insert(starts.end(), extra_starts.begin(), extra_starts.end());

    AscentOptions ascent;
    ascent.max_iterations = options.max_steps;
    const AscentResult r = maximize_multistart(objective, box, starts, ascent);
    return {r.x, r.value};
}

}  // namespace cbo
