#include "cbo/optimize.hpp"

#include "cbo/rng.hpp"

#include <boost/random/sobol.hpp>

#include <cmath>
#include <limits>

namespace cbo {

namespace {

// Coordinates pinned at a bound with the gradient pushing outward.
Eigen::Array<bool, Eigen::Dynamic, 1> active_set(const Box& box, const Vector& x, const Vector& g) {
    const Vector tol = 1e-12 * (box.width().array() + 1.0).matrix();
    return ((x.array() <= (box.lower + tol).array()) && (g.array() < 0.0)) ||
           ((x.array() >= (box.upper - tol).array()) && (g.array() > 0.0)) ||
           (box.width().array() <= 0.0);
}

}  // namespace

AscentResult maximize_in_box(const Objective& f, const Box& box, const Vector& start, const AscentOptions& options) {
    const auto n = box.dim();
    AscentResult result;
    result.x = box.clamp(start);
    Vector g(n);
    result.value = f(result.x, &g);
    if (!std::isfinite(result.value)) return result;

    const Vector scale = box.width().cwiseMax(1e-12);
    Matrix H = Matrix::Zero(n, n);  // inverse curvature model of -f on the free set
    bool fresh = true;

    for (int it = 0; it < options.max_iterations; ++it) {
        result.iterations = it + 1;
        const auto active = active_set(box, result.x, g);
        Vector pg = g;
        for (Eigen::Index i = 0; i < n; ++i)
            if (active[i]) pg[i] = 0.0;
        if (pg.cwiseProduct(scale).lpNorm<Eigen::Infinity>() <= options.gradient_tolerance) {
            result.converged = true;
            break;
        }

        if (fresh) {
            // First step moves at most a tenth of the box along the steepest coordinate.
            const double gmax = pg.cwiseAbs().cwiseProduct(scale).maxCoeff();
            H = Matrix::Identity(n, n) * (0.1 / std::max(gmax, 1e-300));
            H.diagonal() = H.diagonal().cwiseProduct(scale.cwiseAbs2());
        }
        Vector d = H * pg;
        for (Eigen::Index i = 0; i < n; ++i)
            if (active[i]) d[i] = 0.0;
        if (d.dot(pg) <= 0.0) {
            fresh = true;
            continue;
        }

        double t = 1.0;
        bool accepted = false;
        Vector x_new, g_new(n);
        double v_new = 0.0;
        for (int ls = 0; ls < 50; ++ls) {
            x_new = box.clamp(result.x + t * d);
            v_new = f(x_new, nullptr);
            if (std::isfinite(v_new) && v_new >= result.value + 1e-4 * g.dot(x_new - result.x)) {
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if (!accepted) {
            if (fresh) break;
            fresh = true;
            continue;
        }
        v_new = f(x_new, &g_new);
        const Vector step = x_new - result.x;
        const Vector y = g - g_new;  // gradient change of -f
        const double prev = result.value;
        result.x = x_new;
        result.value = v_new;
        const double sy = step.dot(y);
        if (sy > 1e-14 * step.norm() * y.norm()) {
            if (fresh) H = Matrix::Identity(n, n) * (sy / y.squaredNorm());
            const double rho = 1.0 / sy;
            const Matrix I = Matrix::Identity(n, n);
            H = (I - rho * step * y.transpose()) * H * (I - rho * y * step.transpose()) + rho * step * step.transpose();
            fresh = false;
        } else {
            fresh = true;
        }
        g = g_new;
        if (std::abs(v_new - prev) <= options.value_tolerance * (1.0 + std::abs(v_new)) &&
            (step.cwiseQuotient(scale)).lpNorm<Eigen::Infinity>() < 1e-12) {
            result.converged = true;
            break;
        }
    }
    return result;
}

AscentResult maximize_multistart(const Objective& f, const Box& box, const std::vector<Vector>& starts,
                                 const AscentOptions& options) {
    AscentResult best;
    best.value = -std::numeric_limits<double>::infinity();
    bool have = false;
    for (const auto& s : starts) {
        AscentResult r = maximize_in_box(f, box, s, options);
        if (!have || r.value > best.value) {
            best = std::move(r);
            have = true;
        }
    }
    if (!have) {
        best.x = box.center();
        best.value = f(best.x, nullptr);
    }
    return best;
}

std::vector<Vector> sobol_points(const Box& box, int count, std::uint64_t scramble_seed) {
    const auto d = box.dim();
    std::vector<Vector> out;
    if (count <= 0 || d == 0) return out;
    boost::random::sobol engine(static_cast<std::size_t>(d));
    engine.discard(static_cast<boost::uintmax_t>(d));  // skip the all-zero point
    std::vector<std::uint64_t> shift(static_cast<std::size_t>(d), 0);
    if (scramble_seed != 0) {
        RngStream rng(scramble_seed, "sobol-shift");
        for (auto& s : shift) s = rng.next_key();
    }
    constexpr double kScale = 1.0 / 18446744073709551616.0;  // 2^-64
    out.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        Vector u(d);
        for (Eigen::Index j = 0; j < d; ++j)
            u[j] = static_cast<double>(static_cast<std::uint64_t>(engine()) ^ shift[static_cast<std::size_t>(j)]) *
                   kScale;
        out.push_back(box.from_unit(u));
    }
    return out;
}

std::vector<Vector> sobol_starts(const Box& box, int count, std::uint64_t scramble_seed) {
    std::vector<Vector> out;
    if (count <= 0) return out;
    out.push_back(box.center());
    auto rest = sobol_points(box, count - 1, scramble_seed);
    out.insert(out.end(), rest.begin(), rest.end());
    return out;
}

Vector finite_difference_gradient(const std::function<double(const Vector&)>& f, const Vector& x, double step) {
    Vector g(x.size());
    Vector xp = x, xm = x;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        xp[i] = x[i] + step;
        xm[i] = x[i] - step;
        g[i] = (f(xp) - f(xm)) / (2.0 * step);
        xp[i] = xm[i] = x[i];
    }
    return g;
}

}  // namespace cbo
