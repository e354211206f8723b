#include "helpers.hpp"

#include "cbo/acquisition.hpp"
#include "cbo/optimize.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <numbers>

using namespace cbo;
using cbo::test::rel_err;
using cbo::test::uniform_vector;

namespace {

InputPoint sx(double s, double x) { return make_point(Vector::Constant(1, s), Vector::Constant(1, x)); }

// E[Phi(f)^k] for f ~ N(mu, var) by adaptive Gauss-Kronrod over the real line.
double probit_power_quadrature(double mu, double var, int k) {
    const double sd = std::sqrt(var);
    auto f = [&](double t) { return std::pow(normal_cdf(mu + sd * t), k) * normal_pdf(t); };
    return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, -std::numeric_limits<double>::infinity(),
                                                                          std::numeric_limits<double>::infinity(), 15,
                                                                          1e-14);
}

// Observations of Phi(s g(x)) on S = [0, 1], X = [-1, 1].
std::vector<BinaryObservation> wrapper_data(RngStream& rng, int n) {
    std::vector<BinaryObservation> data;
    for (int i = 0; i < n; ++i) {
        const double s = 0.2 + 0.8 * rng.uniform(), x = -1.0 + 2.0 * rng.uniform();
        const double g = 2.0 * std::sin(3.0 * x) + 1.0;
        data.push_back({sx(s, x), rng.bernoulli(normal_cdf(s * g)) ? 1 : 0});
    }
    return data;
}

// E_c[mu_{t+1}(x)] - mu_t(x) for a hypothetical observation at p. Zero for an
// exact posterior; the Laplace mean drifts.
double mean_drift(const LaplaceState& st, const InputPoint& p, const InputPoint& x) {
    const double p1 = predict_class_prob(st, p);
    return p1 * fit_laplace_extended(st, {p, 1}).mean(x) + (1 - p1) * fit_laplace_extended(st, {p, 0}).mean(x) -
           st.mean(x);
}

KernelSpec wrapper_kernel() { return product_context(squared_exponential(Vector::Constant(1, 0.4), 2.0)); }

}  // namespace

// ---------------------------------------------------------------------------

TEST_CASE("probit moments: degenerate and symmetric cases") {
    const ProbitMoments m0 = moments_of_probit(0.7, 0.0);
    CHECK(m0.mean == doctest::Approx(normal_cdf(0.7)).epsilon(1e-15));
    CHECK(m0.variance == 0.0);
    const ProbitMoments a = moments_of_probit(0.0, 2.5), b = moments_of_probit(1.3, 0.8), c = moments_of_probit(-1.3, 0.8);
    CHECK(a.mean == 0.5);
    CHECK(std::abs(b.variance - c.variance) < 1e-15);
    CHECK(std::abs(b.mean + c.mean - 1.0) < 1e-15);
    CHECK_THROWS(moments_of_probit(0.0, -1.0));
}

TEST_CASE("probit moments match adaptive quadrature") {
    for (double mu : {-3.0, -0.5, 0.0, 0.8, 2.5})
        for (double var : {1e-4, 0.3, 1.0, 4.0, 25.0, 100.0}) {
            CAPTURE(mu);
            CAPTURE(var);
            const ProbitMoments m = moments_of_probit(mu, var);
            const double e1 = probit_power_quadrature(mu, var, 1);
            const double e2 = probit_power_quadrature(mu, var, 2);
            CHECK(std::abs(m.mean - e1) < 1e-8);
            CHECK(std::abs(m.variance - (e2 - e1 * e1)) < 1e-8);
        }
}

TEST_CASE("probit moments match Monte Carlo") {
    RngStream rng(60, "pm-mc");
    for (int t = 0; t < 6; ++t) {
        const double mu = -2.0 + 4.0 * rng.uniform(), var = 3.0 * rng.uniform();
        const int n = 1000000;
        double s1 = 0.0, s2 = 0.0, s3 = 0.0, s4 = 0.0;
        for (int i = 0; i < n; ++i) {
            const double p = normal_cdf(mu + std::sqrt(var) * rng.normal());
            s1 += p, s2 += p * p, s3 += p * p * p, s4 += p * p * p * p;
        }
        const double e1 = s1 / n, e2 = s2 / n;
        const double var_p = e2 - e1 * e1;
        const ProbitMoments m = moments_of_probit(mu, var);
        CHECK(std::abs(m.mean - e1) < 3.0 * std::sqrt(var_p / n));
        // Standard error of the sample variance from the fourth central moment.
        const double m4 = s4 / n - 4 * e1 * s3 / n + 6 * e1 * e1 * e2 - 3 * std::pow(e1, 4);
        CHECK(std::abs(m.variance - var_p) < 3.0 * std::sqrt((m4 - var_p * var_p) / n) + 1e-12);
    }
}

TEST_CASE("probit moment derivatives match finite differences") {
    for (double mu : {-1.5, 0.2, 2.0})
        for (double var : {0.05, 1.0, 9.0}) {
            const ProbitMoments m = moments_of_probit(mu, var);
            const double h = 1e-6;
            const ProbitMoments pm = moments_of_probit(mu + h, var), mm = moments_of_probit(mu - h, var);
            const ProbitMoments pv = moments_of_probit(mu, var + h), mv = moments_of_probit(mu, var - h);
            CHECK(rel_err(m.dmean_dmu, (pm.mean - mm.mean) / (2 * h), 1e-6) < 1e-6);
            CHECK(rel_err(m.dmean_dvar, (pv.mean - mv.mean) / (2 * h), 1e-6) < 1e-6);
            CHECK(rel_err(m.dvar_dmu, (pm.variance - mm.variance) / (2 * h), 1e-6) < 1e-6);
            CHECK(rel_err(m.dvar_dvar, (pv.variance - mv.variance) / (2 * h), 1e-6) < 1e-6);
        }
}

TEST_CASE("acquisition config validation") {
    AcquisitionConfig c;
    CHECK_NOTHROW(validate(c));
    c.quadrature_order = 20;
    CHECK_THROWS(validate(c));
    c.quadrature_order = 61;
    c.ucb_beta = -0.1;
    CHECK_THROWS(validate(c));
    CHECK(AcquisitionConfig{}.ucb_beta == doctest::Approx(1.6448536269514722).epsilon(1e-12));
}

// ---------------------------------------------------------------------------

TEST_CASE("UCB gradient, bonus and permutation invariance") {
    RngStream rng(61, "ucb");
    auto data = wrapper_data(rng, 12);
    const LaplaceState st = fit_laplace(data, wrapper_kernel());
    const double beta = normal_quantile(0.95);
    for (int t = 0; t < 10; ++t) {
        const InputPoint p = sx(0.1 + 0.9 * rng.uniform(), -1.0 + 2.0 * rng.uniform());
        Vector g;
        const double v = ucb_value(st, p, beta, &g);
        CHECK(v >= predict_class_prob(st, p) - 1e-15);
        const Vector fd = finite_difference_gradient([&](const Vector& c) { return ucb_value(st, unflatten(c, p), beta); },
                                                     flatten(p), 1e-6);
        CHECK(rel_err(g, fd, 1e-6) < 1e-5);
    }
    std::reverse(data.begin(), data.end());
    const LaplaceState rev = fit_laplace(data, wrapper_kernel());
    for (double x : {-0.7, 0.1, 0.9})
        CHECK(std::abs(ucb_value(st, sx(0.6, x), beta) - ucb_value(rev, sx(0.6, x), beta)) < 1e-10);
}

TEST_CASE("select_x_ucb matches a dense grid and reduces to the class-probability argmax at beta 0") {
    RngStream rng(62, "ucb-grid");
    const LaplaceState st = fit_laplace(wrapper_data(rng, 15), wrapper_kernel());
    const Box X = Box::cube(1, -1, 1);
    const Vector s0 = Vector::Constant(1, 0.7);
    for (double beta : {0.0, normal_quantile(0.95)}) {
        AcquisitionConfig cfg;
        cfg.ucb_beta = beta;
        const ArgmaxResult r = select_x_ucb(st, s0, X, cfg);
        double grid_best = -1.0, grid_x = 0.0;
        for (int i = 0; i <= 10000; ++i) {
            const double x = -1.0 + 2.0 * i / 10000.0;
            const double v = beta == 0.0 ? predict_class_prob(st, sx(0.7, x)) : ucb_value(st, sx(0.7, x), beta);
            if (v > grid_best) grid_best = v, grid_x = x;
        }
        CAPTURE(beta);
        CHECK(r.value >= grid_best - 1e-4);
        if (beta == 0.0) CHECK(std::abs(r.x[0] - grid_x) < 1e-3);
    }
}

// ---------------------------------------------------------------------------

TEST_CASE("BALD limits and symmetry") {
    CHECK(bald_mi(0.3, 0.0) == 0.0);
    CHECK(bald_mi(-2.0, 0.0) == 0.0);
    double prev = 0.0;
    for (double var : {1.0, 10.0, 100.0, 1e4, 1e6}) {
        const double mi = bald_mi(0.0, var);
        CHECK(mi < 1.0);
        CHECK(mi > prev);
        prev = mi;
    }
    CHECK(prev > 0.99);
    for (double mu : {0.1, 0.9, 2.5})
        for (double var : {0.01, 0.7, 5.0}) {
            CHECK(bald_mi(mu, var) == bald_mi(-mu, var));
            CHECK(bald_mi(mu, var) >= 0.0);
        }
    CHECK(binary_entropy(0.5) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(binary_entropy(0.0) == 0.0);
}

TEST_CASE("BALD matches nested Monte-Carlo mutual information") {
    RngStream rng(63, "bald-mc");
    const int outer = 100000;
    for (double mu : {-2.0, -0.5, 0.0, 1.0, 2.5})
        for (double var : {0.1, 1.0, 4.0, 16.0}) {
            double mean_p = 0.0, mean_h = 0.0;
            for (int i = 0; i < outer; ++i) {
                const double p = normal_cdf(mu + std::sqrt(var) * rng.normal());
                mean_p += p / outer;
                mean_h += binary_entropy(p) / outer;
            }
            CAPTURE(mu);
            CAPTURE(var);
            CHECK(std::abs(bald_mi(mu, var) - (binary_entropy(mean_p) - mean_h)) < 0.02);
        }
}

TEST_CASE("BALD gradients match finite differences") {
    for (double mu : {-1.0, 0.3, 2.0})
        for (double var : {0.2, 1.5, 6.0}) {
            double dm = 0.0, dv = 0.0;
            bald_mi(mu, var, &dm, &dv);
            const double h = 1e-6;
            CHECK(rel_err(dm, (bald_mi(mu + h, var) - bald_mi(mu - h, var)) / (2 * h), 1e-6) < 1e-6);
            CHECK(rel_err(dv, (bald_mi(mu, var + h) - bald_mi(mu, var - h)) / (2 * h), 1e-6) < 1e-6);
        }
    RngStream rng(64, "bald-grad");
    const LaplaceState st = fit_laplace(wrapper_data(rng, 10), wrapper_kernel());
    for (int t = 0; t < 10; ++t) {
        const InputPoint p = sx(0.1 + 0.9 * rng.uniform(), -1.0 + 2.0 * rng.uniform());
        Vector g;
        bald_mi(st, p, &g);
        const Vector fd =
            finite_difference_gradient([&](const Vector& c) { return bald_mi(st, unflatten(c, p)); }, flatten(p), 1e-6);
        CHECK(rel_err(g, fd, 1e-6) < 1e-5);
    }
}

TEST_CASE("select_s_bald avoids the uninformative context and matches a grid") {
    RngStream rng(65, "bald-s");
    const LaplaceState st = fit_laplace(wrapper_data(rng, 20), wrapper_kernel());
    const Box S = Box::cube(1, 0, 1);
    for (double x : {-0.9, -0.2, 0.5}) {
        CHECK(bald_mi(st, sx(0.0, x)) == 0.0);
        const ArgmaxResult r = select_s_bald(st, sx(0.5, x), S);
        CHECK(r.x[0] > 0.0);
        CHECK(r.x[0] <= 1.0);
        CHECK(r.value > 0.0);
        double grid = 0.0;
        for (int i = 0; i <= 1000; ++i) grid = std::max(grid, bald_mi(st, sx(i / 1000.0, x)));
        CHECK(r.value >= grid - 1e-3);
        for (int t = 0; t < 100; ++t) CHECK(r.value >= bald_mi(st, sx(rng.uniform(), x)));
    }
}

TEST_CASE("joint BALD returns an interior maximiser") {
    RngStream rng(66, "bald-joint");
    const LaplaceState st = fit_laplace(wrapper_data(rng, 12), wrapper_kernel());
    const Decision d = select_bald_joint(st, Box::cube(1, 0, 1), Box::cube(1, -1, 1));
    CHECK(d.value >= bald_mi(st, sx(0.5, 0.0)));
    for (int t = 0; t < 50; ++t) CHECK(d.value >= bald_mi(st, sx(rng.uniform(), -1.0 + 2.0 * rng.uniform())) - 1e-9);
}

// ---------------------------------------------------------------------------

TEST_CASE("Thompson sampling on an empty posterior is centred and seeded") {
    const KernelSpec k = product_context(squared_exponential(Vector::Constant(1, 0.3)));
    const LaplaceState prior = LaplaceState::prior(k);
    const Box X = Box::cube(1, -1, 1);
    auto map = std::make_shared<const FeatureMap>(build_feature_map(k, Box::cube(1, 0, 1), X));
    const Vector s0 = Vector::Constant(1, 1.0);
    const int n = 500;
    double sum = 0.0, sum2 = 0.0;
    for (int d = 0; d < n; ++d) {
        RngStream rng(67, "ts-prior", {static_cast<std::uint64_t>(d)});
        const double x = select_x_ts(prior, map, s0, X, rng).x[0];
        sum += x, sum2 += x * x;
    }
    const double mean = sum / n, sd = std::sqrt(sum2 / n - mean * mean);
    CHECK(std::abs(mean) < 3.0 * sd / std::sqrt(double(n)));
    RngStream a(68, "ts"), b(68, "ts"), c(69, "ts");
    const double xa = select_x_ts(prior, map, s0, X, a).x[0];
    CHECK(xa == select_x_ts(prior, map, s0, X, b).x[0]);
    CHECK(xa != select_x_ts(prior, map, s0, X, c).x[0]);
}

TEST_CASE("KSS duels: identical streams collide, independent arms share a distribution") {
    const KernelSpec k = preference(product_context(squared_exponential(Vector::Constant(1, 0.3))));
    const LaplaceState prior = LaplaceState::prior(k);
    const Box X = Box::cube(1, -1, 1);
    auto map = std::make_shared<const FeatureMap>(build_feature_map(k, Box::cube(1, 0, 1), X));
    const Vector s0 = Vector::Constant(1, 1.0);
    RngStream a(70, "kss"), b(70, "kss");
    auto [x1, x2] = select_duel_kss(prior, map, s0, X, a, b);
    CHECK(x1 == x2);

    const int n = 500;
    std::vector<double> first, second;
    for (int d = 0; d < n; ++d) {
        RngStream r1(71, "kss-1", {static_cast<std::uint64_t>(d)}), r2(71, "kss-2", {static_cast<std::uint64_t>(d)});
        auto [u, v] = select_duel_kss(prior, map, s0, X, r1, r2);
        first.push_back(u[0]);
        second.push_back(v[0]);
    }
    // Two-sample Kolmogorov-Smirnov at alpha = 0.01.
    std::sort(first.begin(), first.end());
    std::sort(second.begin(), second.end());
    double dmax = 0.0;
    std::size_t i = 0, j = 0;
    while (i < first.size() && j < second.size()) {
        const double t = std::min(first[i], second[j]);
        while (i < first.size() && first[i] <= t) ++i;
        while (j < second.size() && second[j] <= t) ++j;
        dmax = std::max(dmax, std::abs(double(i) - double(j)) / n);
    }
    CHECK(dmax < 1.628 * std::sqrt(2.0 / n));
}

TEST_CASE("MUC: champion is the mean argmax and the challenger maximises duel-outcome variance") {
    RngStream rng(72, "muc");
    const KernelSpec k = preference(product_context(squared_exponential(Vector::Constant(1, 0.4), 2.0)));
    std::vector<BinaryObservation> data;
    for (int i = 0; i < 12; ++i) {
        const double s = 0.3 + 0.7 * rng.uniform(), a = -1 + 2 * rng.uniform(), b = -1 + 2 * rng.uniform();
        auto g = [](double x) { return 2.0 * std::sin(3.0 * x); };
        data.push_back({make_duel(Vector::Constant(1, s), Vector::Constant(1, a), Vector::Constant(1, b)),
                        rng.bernoulli(normal_cdf(s * (g(a) - g(b)))) ? 1 : 0});
    }
    const LaplaceState st = fit_laplace(data, k);
    const Box X = Box::cube(1, -1, 1);
    const Vector s0 = Vector::Constant(1, 0.8);
    auto [x1, x2] = select_duel_muc(st, s0, X);
    CHECK((x1 - posterior_mean_argmax(st, s0, X).x).norm() < 1e-6);
    CHECK(duel_outcome_variance(st, make_duel(s0, x1, x1)) == 0.0);
    CHECK(std::abs(x1[0] - x2[0]) > 1e-3);
    double grid = 0.0;
    for (int i = 0; i <= 10000; ++i)
        grid = std::max(grid, duel_outcome_variance(st, make_duel(s0, x1, Vector::Constant(1, -1 + 2e-4 * i))));
    CHECK(duel_outcome_variance(st, make_duel(s0, x1, x2)) >= grid - 1e-3);
    auto [y1, y2] = select_duel_muc(st, s0, X);
    CHECK(y1 == x1);
    CHECK(y2 == x2);
    for (int t = 0; t < 5; ++t) {
        const InputPoint p = make_duel(s0, x1, uniform_vector(rng, 1, -1, 1));
        Vector g;
        duel_outcome_variance(st, p, &g);
        const Vector fd = finite_difference_gradient(
            [&](const Vector& c) { return duel_outcome_variance(st, unflatten(c, p)); }, flatten(p), 1e-6);
        CHECK(rel_err(g, fd, 1e-6) < 1e-5);
    }
}

// ---------------------------------------------------------------------------

TEST_CASE("knowledge gradient matches a brute-force outcome enumeration") {
    RngStream rng(73, "kg-brute");
    const KernelSpec k = squared_exponential(Vector::Constant(1, 0.3), 1.0);
    const Box X = Box::cube(1, -1, 1);
    const std::vector<BinaryObservation> data{{make_point(Vector(), Vector::Constant(1, -0.5)), 1},
                                              {make_point(Vector(), Vector::Constant(1, 0.5)), 0}};
    const LaplaceState st = fit_laplace(data, k);
    auto grid_max = [&](const LaplaceState& s) {
        double best = -1e300;
        for (int i = 0; i <= 10000; ++i) best = std::max(best, s.mean(make_point(Vector(), Vector::Constant(1, -1 + 2e-4 * i))));
        return best;
    };
    const double now = grid_max(st);
    for (double x : {-0.8, -0.2, 0.0, 0.4, 0.9}) {
        const InputPoint p = make_point(Vector(), Vector::Constant(1, x));
        auto aug = [&](int c) {
            auto d = data;
            d.push_back({p, c});
            return fit_laplace(d, k);
        };
        const double p1 = predict_class_prob(st, p);
        const double oracle = p1 * grid_max(aug(1)) + (1 - p1) * grid_max(aug(0)) - now;
        const double kg = kg_binary(st, p, Vector(), X);
        CAPTURE(x);
        CHECK(std::abs(kg - oracle) <= 1e-3 * std::abs(oracle) + 1e-7);
    }
    // A repeat of a confident observation adds almost nothing beyond the drift
    // of the approximate mean at the incumbent.
    const KernelSpec k2 = squared_exponential(Vector::Constant(1, 0.3), 4.0);
    std::vector<BinaryObservation> sure;
    for (int i = 0; i < 6; ++i) sure.push_back({make_point(Vector(), Vector::Constant(1, 0.2)), 1});
    const LaplaceState confident = fit_laplace(sure, k2);
    const KnowledgeGradient kg(confident, X, Vector());
    const InputPoint incumbent = make_point(Vector(), kg.current_argmax());
    const double v = kg.value(sure.front().point);
    const double drift = mean_drift(confident, sure.front().point, incumbent);
    CHECK(drift < -1e-3);
    CHECK(v >= drift - 1e-6);
    CHECK(std::abs(v) < 0.05);
}

TEST_CASE("knowledge gradient is bounded below by the mean drift at the incumbent") {
    RngStream rng(74, "kg-pos");
    const LaplaceState st = fit_laplace(wrapper_data(rng, 10), wrapper_kernel());
    const Vector s0 = Vector::Constant(1, 1.0);
    const KnowledgeGradient kg(st, Box::cube(1, -1, 1), s0);
    const InputPoint incumbent = make_point(s0, kg.current_argmax());
    for (int t = 0; t < 20; ++t) {
        const InputPoint p = sx(rng.uniform(), -1 + 2 * rng.uniform());
        CHECK(kg.value(p) >= mean_drift(st, p, incumbent) - 1e-6);
    }
}

TEST_CASE("knowledge-gradient envelope gradient matches finite differences") {
    RngStream rng(75, "kg-grad");
    const Box X = Box::cube(1, -1, 1);
    const Vector s0 = Vector::Constant(1, 1.0);
    int checked = 0;
    for (int inst = 0; inst < 20; ++inst) {
        const LaplaceState st = fit_laplace(wrapper_data(rng, 10), wrapper_kernel());
        const KnowledgeGradient kg(st, X, s0);
        const InputPoint p = sx(0.2 + 0.7 * rng.uniform(), -0.9 + 1.8 * rng.uniform());
        Vector g;
        kg.value(p, &g);
        const Vector fd =
            finite_difference_gradient([&](const Vector& c) { return kg.value(unflatten(c, p)); }, flatten(p), 1e-4);
        CAPTURE(inst);
        CHECK(rel_err(g, fd, 1e-8) < 1e-4);
        ++checked;

        // The class-probability term alone.
        double mu = 0.0, var = 0.0;
        Vector dm, dv;
        st.latent_with_gradient(p, mu, var, &dm, &dv);
        const ProbitMoments m = moments_of_probit(mu, var);
        const Vector dp = m.dmean_dmu * dm + m.dmean_dvar * dv;
        const Vector fdp = finite_difference_gradient(
            [&](const Vector& c) { return predict_class_prob(st, unflatten(c, p)); }, flatten(p), 1e-5);
        CHECK(rel_err(dp, fdp, 1e-8) < 1e-5);
    }
    CHECK(checked == 20);
}

TEST_CASE("knowledge gradient at a symmetry centre has no gradient along the symmetric axis") {
    const KernelSpec k = squared_exponential(Vector::Constant(1, 0.4), 1.0);
    const std::vector<BinaryObservation> data{{make_point(Vector(), Vector::Constant(1, 0.0)), 1},
                                              {make_point(Vector(), Vector::Constant(1, -0.8)), 0},
                                              {make_point(Vector(), Vector::Constant(1, 0.8)), 0}};
    const LaplaceState st = fit_laplace(data, k);
    const Vector g = kg_gradient(st, make_point(Vector(), Vector::Zero(1)), Vector(), Box::cube(1, -1, 1));
    CHECK(std::abs(g[0]) < 1e-6);
}

TEST_CASE("maximize_ckg matches a grid search and is deterministic") {
    RngStream rng(76, "ckg");
    const LaplaceState st = fit_laplace(wrapper_data(rng, 8), wrapper_kernel());
    const Box S = Box::cube(1, 0, 1), X = Box::cube(1, -1, 1);
    AcquisitionConfig cfg;
    const Decision d = maximize_ckg(st, S, X, cfg);
    const KnowledgeGradient kg(st, X, S.upper, cfg);
    double grid = -1e300;
    for (int i = 0; i < 100; ++i)
        for (int j = 0; j < 100; ++j) grid = std::max(grid, kg.value(sx((i + 0.5) / 100, -1 + 2 * (j + 0.5) / 100)));
    CHECK(d.value >= grid - 1e-2);
    for (const auto& c : sobol_starts(concat(S, X), cfg.ckg_screen, 0xc86))
        CHECK(d.value >= kg.value(sx(c[0], c[1])) - 1e-12);
    const Decision again = maximize_ckg(st, S, X, cfg);
    CHECK(again.s == d.s);
    CHECK(again.x == d.x);
}

// ---------------------------------------------------------------------------

TEST_CASE("composed rules") {
    RngStream data_rng(77, "rules");
    const LaplaceState st = fit_laplace(wrapper_data(data_rng, 10), wrapper_kernel());
    const Box S = Box::cube(1, 0, 1), X = Box::cube(1, -1, 1);
    auto map = std::make_shared<const FeatureMap>(build_feature_map(st.kernel(), S, X));
    const AcquisitionProblem problem{st, S, X, false, map, {}};

    RngStream a(78, "r"), b(78, "r");
    const Decision r1 = apply_rule(rule_from_id("random"), problem, a);
    const Decision r2 = apply_rule(compose_sequential(random_x_rule(), random_context_rule()), problem, b);
    CHECK(r1.s == r2.s);
    CHECK(r1.x == r2.x);

    RngStream c(79, "r");
    const Decision u = apply_rule(rule_from_id("ucb-ald"), problem, c);
    CHECK(u.s == S.clamp_interior(select_s_bald(st, make_point(S.center(), u.x), S).x));

    for (const auto& id : rule_ids()) {
        CAPTURE(id);
        const bool pref = rule_is_preferential(id);
        if (pref) continue;
        RngStream r(80, id);
        const Decision d = apply_rule(rule_from_id(id), problem, r);
        CHECK(S.contains(d.s));
        CHECK(X.contains(d.x));
        CHECK(d.s[0] > 0.0);
        CHECK(d.s[0] < 1.0);
        CHECK(std::abs(d.x[0]) < 1.0);
        CHECK(!d.x2);
    }
    CHECK_THROWS(rule_from_id("nope"));
    RngStream r(81, "kss");
    CHECK_THROWS(apply_rule(rule_from_id("kss-ald"), problem, r));
}

TEST_CASE("preferential rules return interior duels") {
    RngStream rng(82, "pref-rules");
    const KernelSpec k = preference(product_context(squared_exponential(Vector::Constant(1, 0.4), 2.0)));
    std::vector<BinaryObservation> data;
    for (int i = 0; i < 8; ++i)
        data.push_back({make_duel(uniform_vector(rng, 1, 0.2, 1), uniform_vector(rng, 1, -1, 1), uniform_vector(rng, 1, -1, 1)),
                        i % 2});
    const LaplaceState st = fit_laplace(data, k);
    const Box S = Box::cube(1, 0, 1), X = Box::cube(1, -1, 1);
    auto map = std::make_shared<const FeatureMap>(build_feature_map(k, S, X));
    const AcquisitionProblem problem{st, S, X, true, map, {}};
    for (const std::string id : {"kss-ald", "muc-ald", "kss-rand-s", "muc-rand-s", "random", "bald"}) {
        CAPTURE(id);
        RngStream r(83, id);
        const Decision d = apply_rule(rule_from_id(id), problem, r);
        REQUIRE(d.x2);
        CHECK(d.s[0] > 0.0);
        CHECK(d.s[0] < 1.0);
        CHECK(std::abs(d.x[0]) < 1.0);
        CHECK(std::abs((*d.x2)[0]) < 1.0);
    }
    RngStream r(84, "ucb");
    CHECK_THROWS(apply_rule(rule_from_id("ucb-ald"), problem, r));
}
