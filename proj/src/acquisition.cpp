#include "cbo/acquisition.hpp"

#include "cbo/optimize.hpp"

#include <boost/math/tools/minima.hpp>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace cbo {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct GaussRule {
    Vector nodes, weights;
};

// Gauss-Legendre rule on [-1, 1] by Golub-Welsch.
GaussRule legendre_rule(int order) {
    static std::mutex mutex;
    static std::map<int, GaussRule> cache;
    std::lock_guard lock(mutex);
    if (auto it = cache.find(order); it != cache.end()) return it->second;
    Matrix J = Matrix::Zero(order, order);
    for (int k = 1; k < order; ++k) {
        const double b = k / std::sqrt(4.0 * k * k - 1.0);
        J(k, k - 1) = J(k - 1, k) = b;
    }
    Eigen::SelfAdjointEigenSolver<Matrix> eig(J);
    GaussRule rule{eig.eigenvalues(), 2.0 * eig.eigenvectors().row(0).transpose().cwiseAbs2()};
    return cache.emplace(order, std::move(rule)).first->second;
}

std::vector<Vector> top_starts(const std::vector<Vector>& candidates, const std::vector<double>& score, int count) {
    std::vector<std::size_t> order(candidates.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return score[a] > score[b]; });
    std::vector<Vector> out;
    for (std::size_t i = 0; i < order.size() && static_cast<int>(i) < count; ++i) out.push_back(candidates[order[i]]);
    return out;
}

// Objective over the parameter block of make_point(s0, x), or over the x2
// block of a duel with the first arm fixed.
Objective over_params(std::function<double(const InputPoint&, Vector*)> f, const Vector& s0, const Box& box) {
    const auto ds = s0.size();
    const auto dx = box.dim();
    return [f = std::move(f), s0, ds, dx](const Vector& x, Vector* grad) {
        const InputPoint p = make_point(s0, x);
        if (!grad) return f(p, nullptr);
        Vector g;
        const double v = f(p, &g);
        *grad = g.segment(ds, dx);
        return v;
    };
}

// Best training locations under `score`, clamped into the box.
std::vector<Vector> data_starts(const LaplaceState& state, const Box& box, int count,
                                const std::function<double(const Vector&)>& score) {
    std::vector<Vector> cands;
    std::vector<double> values;
    for (const auto& q : state.points()) {
        if (q.x.size() != box.dim()) continue;
        for (const Vector* c : {&q.x, q.x2 ? &*q.x2 : nullptr}) {
            if (!c) continue;
            cands.push_back(box.clamp(*c));
            values.push_back(score(cands.back()));
        }
    }
    return top_starts(cands, values, count);
}

}  // namespace

void validate(const AcquisitionConfig& c) {
    if (!(c.ucb_beta >= 0.0)) throw std::invalid_argument("ucb_beta must be non-negative");
    if (c.quadrature_order < 21 || c.quadrature_order % 2 == 0)
        throw std::invalid_argument("quadrature order must be odd and at least 21");
    if (c.x_restarts < 1 || c.s_grid < 2 || c.joint_screen < 1 || c.ckg_screen < 1 || c.ckg_polish < 1 ||
        c.kg_inner_restarts < 1)
        throw std::invalid_argument("acquisition restart and grid counts must be positive");
}

// ---------------------------------------------------------------------------

ProbitMoments moments_of_probit(double mu, double var, int order) {
    if (!(var >= 0.0)) throw std::invalid_argument("latent variance must be non-negative");
    ProbitMoments m;
    const double q = 1.0 + var;
    const double rq = std::sqrt(q);
    const double a = mu / rq;
    const double pa = normal_pdf(a);
    m.mean = normal_cdf(a);
    m.dmean_dmu = pa / rq;
    m.dmean_dvar = -0.5 * mu * pa / (q * rq);
    if (var == 0.0) {
        m.dvar_dvar = normal_pdf(mu) * normal_pdf(mu);
        return m;
    }
    // V = (1/2pi) int_0^{asin rho} exp(-a^2 / (1 + sin t)) dt with rho = var / (1 + var).
    const double rho = var / q;
    const double one_minus_rho2 = (1.0 / q) * (1.0 + rho);
    const double top = std::atan2(rho, std::sqrt(one_minus_rho2));
    const GaussRule& rule = legendre_rule(order);
    double v = 0.0, dv_da = 0.0;
    for (Eigen::Index i = 0; i < rule.nodes.size(); ++i) {
        const double t = 0.5 * top * (rule.nodes[i] + 1.0);
        const double inv = 1.0 / (1.0 + std::sin(t));
        const double e = std::exp(-a * a * inv);
        v += rule.weights[i] * e;
        dv_da += rule.weights[i] * (-2.0 * a * inv) * e;
    }
    const double scale = 0.5 * top / (2.0 * std::numbers::pi);
    m.variance = std::max(0.0, scale * v);
    dv_da *= scale;
    const double dv_drho = std::exp(-a * a / (1.0 + rho)) / (2.0 * std::numbers::pi * std::sqrt(one_minus_rho2));
    m.dvar_dmu = dv_da / rq;
    m.dvar_dvar = dv_da * (-0.5 * mu / (q * rq)) + dv_drho / (q * q);
    return m;
}

double ucb_value(const LaplaceState& state, const InputPoint& p, double beta, Vector* grad, int order) {
    double mu = 0.0, var = 0.0;
    Vector dm, dv;
    state.latent_with_gradient(p, mu, var, grad ? &dm : nullptr, grad ? &dv : nullptr);
    var = std::max(var, 0.0);
    const ProbitMoments m = moments_of_probit(mu, var, order);
    const double sd = std::sqrt(m.variance);
    if (grad) {
        *grad = m.dmean_dmu * dm + m.dmean_dvar * dv;
        if (sd > 1e-150) *grad += (beta / (2.0 * sd)) * (m.dvar_dmu * dm + m.dvar_dvar * dv);
    }
    return m.mean + beta * sd;
}

ArgmaxResult select_x_ucb(const LaplaceState& state, const Vector& s0, const Box& box,
                          const AcquisitionConfig& config) {
    const double beta = config.ucb_beta;
    const int order = config.quadrature_order;
    const Objective objective = over_params(
        [&](const InputPoint& p, Vector* g) { return ucb_value(state, p, beta, g, order); }, s0, box);
    std::vector<Vector> starts = sobol_starts(box, config.x_restarts, 0x0cb);
    for (auto& x : data_starts(state, box, 3, [&](const Vector& x) { return objective(x, nullptr); }))
        starts.push_back(std::move(x));
    const AscentResult r = maximize_multistart(objective, box, starts);
    return {r.x, r.value};
}

// ---------------------------------------------------------------------------

double binary_entropy(double p) {
    if (p <= 0.0 || p >= 1.0) return 0.0;
    return -(p * std::log2(p) + (1.0 - p) * std::log2(1.0 - p));
}

double bald_mi(double mu, double var, double* dmu, double* dvar) {
    if (dmu) *dmu = 0.0;
    if (dvar) *dvar = 0.0;
    if (!(var > 0.0)) return 0.0;
    const double c2 = std::numbers::pi * std::numbers::ln2 / 2.0;
    const double c = std::sqrt(c2);
    const double q = 1.0 + var;
    const double rq = std::sqrt(q);
    const double a = mu / rq;
    const double lp = log_normal_cdf(a), lq = log_normal_cdf(-a);
    const double p = std::exp(lp), pc = std::exp(lq);
    const double h = -(p * lp + pc * lq) / std::numbers::ln2;
    const double u = var + c2;
    const double e = std::exp(-mu * mu / (2.0 * u));
    const double mi = h - c * e / std::sqrt(u);
    if (!(mi > 0.0)) return 0.0;
    const double dh_da = (lq - lp) / std::numbers::ln2 * normal_pdf(a);
    if (dmu) *dmu = dh_da / rq + c * e * mu / (u * std::sqrt(u));
    if (dvar)
        *dvar = dh_da * (-0.5 * mu / (q * rq)) - c * e * (mu * mu / (2.0 * u * u * std::sqrt(u)) - 0.5 / (u * std::sqrt(u)));
    return mi;
}

double bald_mi(const LaplaceState& state, const InputPoint& p, Vector* grad) {
    double mu = 0.0, var = 0.0;
    Vector dm, dv;
    state.latent_with_gradient(p, mu, var, grad ? &dm : nullptr, grad ? &dv : nullptr);
    double gm = 0.0, gv = 0.0;
    const double mi = bald_mi(mu, std::max(var, 0.0), &gm, &gv);
    if (grad) *grad = gm * dm + gv * dv;
    return mi;
}

ArgmaxResult select_s_bald(const LaplaceState& state, const InputPoint& query, const Box& box,
                           const AcquisitionConfig& config) {
    const auto ds = box.dim();
    if (ds == 0) return {Vector(), bald_mi(state, query)};
    auto at = [&](const Vector& s) {
        InputPoint p = query;
        p.s = s;
        return p;
    };
    if (ds == 1) {
        const double lo = box.lower[0], hi = box.upper[0];
        const int n = config.s_grid;
        const double h = (hi - lo) / n;
        auto f = [&](double s) { return bald_mi(state, at(Vector::Constant(1, s))); };
        int best = 0;
        double best_value = -kInf;
        for (int i = 0; i < n; ++i) {
            const double v = f(lo + h * (i + 0.5));
            if (v > best_value) best_value = v, best = i;
        }
        double best_s = lo + h * (best + 0.5);
        if (best_value > 0.0) {
            const double a = std::max(lo, best_s - h), b = std::min(hi, best_s + h);
            const auto r = boost::math::tools::brent_find_minima([&](double s) { return -f(s); }, a, b, 40);
            if (-r.second > best_value) best_value = -r.second, best_s = r.first;
        }
        return {Vector::Constant(1, best_s), best_value};
    }
    const Objective objective = [&](const Vector& s, Vector* grad) {
        if (!grad) return bald_mi(state, at(s));
        Vector g;
        const double v = bald_mi(state, at(s), &g);
        *grad = g.head(ds);
        return v;
    };
    const std::vector<Vector> cands = sobol_starts(box, config.s_grid, 0xba1d);
    std::vector<double> score;
    for (const auto& s : cands) score.push_back(objective(s, nullptr));
    const AscentResult r = maximize_multistart(objective, box, top_starts(cands, score, 3));
    return {r.x, r.value};
}

Decision select_bald_joint(const LaplaceState& state, const Box& S, const Box& X, const AcquisitionConfig& config) {
    const bool pref = state.kernel().family == KernelFamily::Preference;
    const Box joint = pref ? concat(concat(S, X), X) : concat(S, X);
    const InputPoint like = pref ? make_duel(S.center(), X.center(), X.center()) : make_point(S.center(), X.center());
    const Objective objective = [&](const Vector& c, Vector* grad) { return bald_mi(state, unflatten(c, like), grad); };
    const std::vector<Vector> cands = sobol_starts(joint, config.joint_screen, 0xba1d);
    std::vector<double> score;
    for (const auto& c : cands) score.push_back(objective(c, nullptr));
    const AscentResult r = maximize_multistart(objective, joint, top_starts(cands, score, 5));
    const InputPoint p = unflatten(r.x, like);
    Decision d;
    d.s = p.s;
    d.x = p.x;
    d.x2 = p.x2;
    d.value = r.value;
    d.restarts = 5;
    return d;
}

// ---------------------------------------------------------------------------

ArgmaxResult select_x_ts(const LaplaceState& state, std::shared_ptr<const FeatureMap> map, const Vector& s0,
                         const Box& box, RngStream& rng, const AcquisitionConfig& config) {
    const FunctionSample f = sample_decoupled(state, std::move(map), rng);
    return sample_argmax(f, box, s0, config.sample_argmax);
}

std::pair<Vector, Vector> select_duel_kss(const LaplaceState& state, std::shared_ptr<const FeatureMap> map,
                                          const Vector& s0, const Box& box, RngStream& rng1, RngStream& rng2,
                                          const AcquisitionConfig& config) {
    Vector x1 = select_x_ts(state, map, s0, box, rng1, config).x;
    Vector x2 = select_x_ts(state, map, s0, box, rng2, config).x;
    return {std::move(x1), std::move(x2)};
}

double duel_outcome_variance(const LaplaceState& state, const InputPoint& duel, Vector* grad, int order) {
    double mu = 0.0, var = 0.0;
    Vector dm, dv;
    state.latent_with_gradient(duel, mu, var, grad ? &dm : nullptr, grad ? &dv : nullptr);
    const ProbitMoments m = moments_of_probit(mu, std::max(var, 0.0), order);
    if (grad) *grad = m.dvar_dmu * dm + m.dvar_dvar * dv;
    return m.variance;
}

std::pair<Vector, Vector> select_duel_muc(const LaplaceState& state, const Vector& s0, const Box& box,
                                          const AcquisitionConfig& config) {
    MeanArgmaxOptions opts;
    opts.restarts = config.x_restarts;
    const Vector champion = posterior_mean_argmax(state, s0, box, opts).x;
    const auto ds = s0.size();
    const auto dx = box.dim();
    const int order = config.quadrature_order;
    const Objective objective = [&](const Vector& x, Vector* grad) {
        const InputPoint p = make_duel(s0, champion, x);
        if (!grad) return duel_outcome_variance(state, p, nullptr, order);
        Vector g;
        const double v = duel_outcome_variance(state, p, &g, order);
        *grad = g.segment(ds + dx, dx);
        return v;
    };
    std::vector<Vector> starts = sobol_starts(box, config.x_restarts, 0x3cc);
    for (auto& x : data_starts(state, box, 3, [&](const Vector& x) { return objective(x, nullptr); }))
        starts.push_back(std::move(x));
    const AscentResult r = maximize_multistart(objective, box, starts);
    return {champion, r.x};
}

// ---------------------------------------------------------------------------

KnowledgeGradient::KnowledgeGradient(const LaplaceState& state, const Box& param_box, Vector s0,
                                     const AcquisitionConfig& config)
    : state_(state), param_box_(param_box), s0_(std::move(s0)), config_(config) {
    MeanArgmaxOptions opts;
    opts.restarts = config_.x_restarts;
    const ArgmaxResult r = posterior_mean_argmax(state_, s0_, param_box_, opts);
    current_max_ = r.value;
    current_argmax_ = r.x;
}

double KnowledgeGradient::value(const InputPoint& candidate, Vector* grad) const {
    if (candidate.is_duel()) throw DimensionError("knowledge gradient takes plain candidates");
    const auto D = candidate.coord_dim();
    const KernelSpec& k = state_.kernel();

    double mu = 0.0, var = 0.0;
    Vector dm, dv;
    state_.latent_with_gradient(candidate, mu, var, grad ? &dm : nullptr, grad ? &dv : nullptr);
    const ProbitMoments pm = moments_of_probit(mu, std::max(var, 0.0), config_.quadrature_order);
    const double p1 = pm.mean;

    MeanArgmaxOptions inner;
    inner.restarts = config_.kg_inner_restarts;
    std::vector<Vector> extra{current_argmax_};
    if (candidate.x.size() == param_box_.dim()) extra.push_back(param_box_.clamp(candidate.x));

    double best[2];
    Vector dbest[2];
    for (int c = 0; c < 2; ++c) {
        LaplaceOptions opts;
        opts.tolerance = config_.kg_refit_tolerance;
        std::optional<LaplaceState> st;
        try {
            st.emplace(fit_laplace_extended(state_, {candidate, c}, opts));
        } catch (const ConvergenceError&) {
            try {
                st.emplace(fit_laplace_extended(state_, {candidate, c}));
            } catch (const ConvergenceError&) {
                if (grad) grad->setZero(D);
                return -kInf;
            }
        }
        const ArgmaxResult r = posterior_mean_argmax(*st, s0_, param_box_, inner, extra);
        best[c] = r.value;
        if (!grad) continue;

        // Envelope theorem: x*_c held fixed, the candidate moves the refit
        // mode through the last row and column of K.
        const auto n1 = st->size();
        const Eigen::Index last = n1 - 1;
        const auto& pts = st->points();
        const Vector& g = st->gradient();
        const Vector& w = st->w();
        Matrix dK_g = Matrix::Zero(n1, D);
        for (Eigen::Index i = 0; i < last; ++i) {
            const Vector gi = kernel_grad_x(k, candidate, pts[static_cast<std::size_t>(i)]);
            dK_g.row(i) = g[last] * gi.transpose();
            dK_g.row(last) += g[i] * gi.transpose();
        }
        dK_g.row(last) += 2.0 * g[last] * kernel_grad_x(k, candidate, candidate).transpose();
        Matrix M = st->gram() * w.asDiagonal();
        M.diagonal().array() += 1.0;
        const Matrix dy = M.partialPivLu().solve(dK_g);
        const InputPoint star = make_point(s0_, r.x);
        const Vector kstar = cross_covariance(k, pts, star);
        dbest[c] = g[last] * kernel_grad_x(k, candidate, star) - dy.transpose() * kstar.cwiseProduct(w);
    }
    if (grad) {
        const Vector dp1 = pm.dmean_dmu * dm + pm.dmean_dvar * dv;
        *grad = (best[1] - best[0]) * dp1 + p1 * dbest[1] + (1.0 - p1) * dbest[0];
    }
    return p1 * best[1] + (1.0 - p1) * best[0] - current_max_;
}

double kg_binary(const LaplaceState& state, const InputPoint& candidate, const Vector& s0, const Box& box,
                 const AcquisitionConfig& config) {
    return KnowledgeGradient(state, box, s0, config).value(candidate);
}

Vector kg_gradient(const LaplaceState& state, const InputPoint& candidate, const Vector& s0, const Box& box,
                   const AcquisitionConfig& config) {
    Vector g;
    KnowledgeGradient(state, box, s0, config).value(candidate, &g);
    return g;
}

Decision maximize_ckg(const LaplaceState& state, const Box& S, const Box& X, const AcquisitionConfig& config) {
    const KnowledgeGradient kg(state, X, S.upper, config);
    const Box joint = concat(S, X);
    const auto ds = S.dim();
    const auto dx = X.dim();
    const Objective objective = [&](const Vector& c, Vector* grad) {
        return kg.value(make_point(c.head(ds), c.tail(dx)), grad);
    };
    const std::vector<Vector> cands = sobol_starts(joint, config.ckg_screen, 0xc86);
    std::vector<double> score;
    for (const auto& c : cands) score.push_back(objective(c, nullptr));
    AscentOptions ascent;
    ascent.max_iterations = config.ckg_max_steps;
    const AscentResult r = maximize_multistart(objective, joint, top_starts(cands, score, config.ckg_polish), ascent);
    Decision d;
    d.s = r.x.head(ds);
    d.x = r.x.tail(dx);
    d.value = r.value;
    d.restarts = config.ckg_polish;
    return d;
}

// ---------------------------------------------------------------------------

namespace {

void require_binary(const AcquisitionProblem& p, const char* rule) {
    if (p.preferential) throw std::invalid_argument(std::string(rule) + " needs binary observations");
}

void require_preferential(const AcquisitionProblem& p, const char* rule) {
    if (!p.preferential) throw std::invalid_argument(std::string(rule) + " needs preferential observations");
}

void require_map(const AcquisitionProblem& p) {
    if (!p.map) throw std::invalid_argument("sampling rule needs a feature map");
}

}  // namespace

XRule ucb_x_rule() {
    return [](const AcquisitionProblem& p, const Vector& s0, RngStream&) {
        require_binary(p, "ucb");
        const ArgmaxResult r = select_x_ucb(p.state, s0, p.param_box, p.config);
        return ParamChoice{r.x, std::nullopt, r.value};
    };
}

XRule ts_x_rule() {
    return [](const AcquisitionProblem& p, const Vector& s0, RngStream& rng) {
        require_binary(p, "ts");
        require_map(p);
        const ArgmaxResult r = select_x_ts(p.state, p.map, s0, p.param_box, rng, p.config);
        return ParamChoice{r.x, std::nullopt, r.value};
    };
}

XRule kss_x_rule() {
    return [](const AcquisitionProblem& p, const Vector& s0, RngStream& rng) {
        require_preferential(p, "kss");
        require_map(p);
        RngStream a(rng.next_key()), b(rng.next_key());
        auto [x1, x2] = select_duel_kss(p.state, p.map, s0, p.param_box, a, b, p.config);
        return ParamChoice{std::move(x1), std::move(x2), 0.0};
    };
}

XRule muc_x_rule() {
    return [](const AcquisitionProblem& p, const Vector& s0, RngStream&) {
        require_preferential(p, "muc");
        auto [x1, x2] = select_duel_muc(p.state, s0, p.param_box, p.config);
        const double v = duel_outcome_variance(p.state, make_duel(s0, x1, x2), nullptr, p.config.quadrature_order);
        return ParamChoice{std::move(x1), std::move(x2), v};
    };
}

XRule random_x_rule() {
    return [](const AcquisitionProblem& p, const Vector&, RngStream& rng) {
        ParamChoice c;
        c.x = rng.uniform_in(p.param_box);
        if (p.preferential) c.x2 = rng.uniform_in(p.param_box);
        return c;
    };
}

ContextRule bald_context_rule() {
    return [](const AcquisitionProblem& p, const ParamChoice& c, RngStream&) {
        const Vector s = p.context_box.center();
        const InputPoint q = c.x2 ? make_duel(s, c.x, *c.x2) : make_point(s, c.x);
        return select_s_bald(p.state, q, p.context_box, p.config).x;
    };
}

ContextRule random_context_rule() {
    return [](const AcquisitionProblem& p, const ParamChoice&, RngStream& rng) { return rng.uniform_in(p.context_box); };
}

Rule compose_sequential(XRule x_rule, ContextRule context_rule) {
    return [x_rule = std::move(x_rule), context_rule = std::move(context_rule)](const AcquisitionProblem& p,
                                                                                RngStream& rng) {
        const Vector s0 = rng.uniform_in(p.context_box);
        ParamChoice c = x_rule(p, s0, rng);
        Decision d;
        d.s = context_rule(p, c, rng);
        d.value = c.value;
        d.x = std::move(c.x);
        d.x2 = std::move(c.x2);
        return d;
    };
}

const std::vector<std::string>& rule_ids() {
    static const std::vector<std::string> ids{"ckg",        "ucb-ald",   "ts-ald",     "kss-ald",
                                              "muc-ald",    "ucb-rand-s", "ts-rand-s", "kss-rand-s",
                                              "muc-rand-s", "bald",       "random"};
    return ids;
}

Rule rule_from_id(const std::string& id) {
    if (id == "ckg")
        return [](const AcquisitionProblem& p, RngStream&) {
            require_binary(p, "ckg");
            return maximize_ckg(p.state, p.context_box, p.param_box, p.config);
        };
    if (id == "bald")
        return [](const AcquisitionProblem& p, RngStream&) {
            return select_bald_joint(p.state, p.context_box, p.param_box, p.config);
        };
    if (id == "random") return compose_sequential(random_x_rule(), random_context_rule());
    const std::map<std::string, XRule (*)()> x_rules{
        {"ucb", ucb_x_rule}, {"ts", ts_x_rule}, {"kss", kss_x_rule}, {"muc", muc_x_rule}};
    for (const auto& [prefix, make] : x_rules) {
        if (id == prefix + "-ald") return compose_sequential(make(), bald_context_rule());
        if (id == prefix + "-rand-s") return compose_sequential(make(), random_context_rule());
    }
    throw std::invalid_argument("unknown rule: " + id);
}

bool rule_is_preferential(const std::string& id) { return id.starts_with("kss") || id.starts_with("muc"); }

bool rule_needs_features(const std::string& id) { return id.starts_with("ts") || id.starts_with("kss"); }

Decision apply_rule(const Rule& rule, const AcquisitionProblem& problem, RngStream& rng) {
    const auto start = std::chrono::steady_clock::now();
    Decision d = rule(problem, rng);
    d.s = problem.context_box.clamp_interior(d.s);
    d.x = problem.param_box.clamp_interior(d.x);
    if (d.x2) d.x2 = problem.param_box.clamp_interior(*d.x2);
    d.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return d;
}

}  // namespace cbo
