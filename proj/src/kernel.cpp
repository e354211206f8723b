#include "cbo/kernel.hpp"

#include <cmath>
#include <stdexcept>

namespace cbo {

namespace {

using ConstRef = Eigen::Ref<const Vector>;

constexpr double kSqrt3 = 1.7320508075688772;
constexpr double kSqrt5 = 2.23606797749979;

const Vector& empty_vector() {
    static const Vector v;
    return v;
}

// Value and first-argument gradient of a stationary kernel. `grad` may be null.
double stationary_value(const KernelSpec& k, const ConstRef& a, const ConstRef& b, Vector* grad) {
    if (a.size() != k.lengthscales.size() || b.size() != k.lengthscales.size())
        throw DimensionError("stationary kernel: input dimension " + std::to_string(a.size()) + " does not match " +
                             std::to_string(k.lengthscales.size()) + " lengthscales");
    const auto d = a.size();
    double r2 = 0.0;
    for (Eigen::Index i = 0; i < d; ++i) {
        const double u = (a[i] - b[i]) / k.lengthscales[i];
        r2 += u * u;
    }
    double value = 0.0;
    double dscale = 0.0;  // dk/da = dscale * (a - b) / l^2
    switch (k.family) {
        case KernelFamily::SquaredExponential:
            value = k.variance * std::exp(-0.5 * r2);
            dscale = -value;
            break;
        case KernelFamily::Matern32: {
            const double r = std::sqrt(r2);
            const double e = std::exp(-kSqrt3 * r);
            value = k.variance * (1.0 + kSqrt3 * r) * e;
            dscale = -3.0 * k.variance * e;
            break;
        }
        case KernelFamily::Matern52: {
            const double r = std::sqrt(r2);
            const double e = std::exp(-kSqrt5 * r);
            value = k.variance * (1.0 + kSqrt5 * r + 5.0 / 3.0 * r2) * e;
            dscale = -5.0 / 3.0 * k.variance * (1.0 + kSqrt5 * r) * e;
            break;
        }
        default:
            throw std::logic_error("stationary_value called on a composite kernel");
    }
    if (grad) {
        grad->resize(d);
        for (Eigen::Index i = 0; i < d; ++i)
            (*grad)[i] = dscale * (a[i] - b[i]) / (k.lengthscales[i] * k.lengthscales[i]);
    }
    return value;
}

// [d/dlog l_i ..., d/dlog variance]; note dk/dlog l_i = -(dk/da_i) (a_i - b_i).
Vector stationary_hyper(const KernelSpec& k, const ConstRef& a, const ConstRef& b) {
    Vector g;
    const double value = stationary_value(k, a, b, &g);
    const auto d = k.lengthscales.size();
    Vector out(d + 1);
    out.head(d) = -g.cwiseProduct(a - b);
    out[d] = value;
    return out;
}

Vector join(const ConstRef& s, const ConstRef& x) {
    Vector z(s.size() + x.size());
    z << s, x;
    return z;
}

// Non-preference kernels on plain points (s, x). Gradients are with respect
// to the first point's s and x blocks; either output may be null.
double plain_eval(const KernelSpec& k, const ConstRef& ps, const ConstRef& px, const ConstRef& qs,
                  const ConstRef& qx, Vector* gs, Vector* gx) {
    if (ps.size() != qs.size() || px.size() != qx.size()) throw DimensionError("points have different layouts");
    switch (k.family) {
        case KernelFamily::SquaredExponential:
        case KernelFamily::Matern32:
        case KernelFamily::Matern52: {
            if (ps.size() == 0) {
                if (gs) gs->resize(0);
                return stationary_value(k, px, qx, gx);
            }
            Vector g;
            const double v = stationary_value(k, join(ps, px), join(qs, qx), (gs || gx) ? &g : nullptr);
            if (gs) *gs = g.head(ps.size());
            if (gx) *gx = g.tail(px.size());
            return v;
        }
        case KernelFamily::ProductContext: {
            const KernelSpec& base = k.children.at(0);
            Vector gxb, gsc;
            const double kb = plain_eval(base, empty_vector(), px, empty_vector(), qx, nullptr, gx ? &gxb : nullptr);
            double kc = 0.0;
            if (const KernelSpec* ctx = k.context_kernel()) {
                kc = plain_eval(*ctx, empty_vector(), ps, empty_vector(), qs, nullptr, gs ? &gsc : nullptr);
            } else {
                kc = ps.dot(qs);
                if (gs) gsc = qs;
            }
            if (gs) *gs = kb * gsc;
            if (gx) *gx = kc * gxb;
            return kc * kb;
        }
        case KernelFamily::LinearContextSum: {
            const KernelSpec& base = k.children.at(0);
            const double kb = plain_eval(base, empty_vector(), px, empty_vector(), qx, nullptr, gx);
            if (gs) *gs = k.context_slope * qs;
            return k.context_slope * ps.dot(qs) + kb;
        }
        case KernelFamily::Preference:
            break;
    }
    throw std::logic_error("preference kernel cannot be nested");
}

Vector plain_hyper(const KernelSpec& k, const ConstRef& ps, const ConstRef& px, const ConstRef& qs,
                   const ConstRef& qx) {
    switch (k.family) {
        case KernelFamily::SquaredExponential:
        case KernelFamily::Matern32:
        case KernelFamily::Matern52:
            if (ps.size() == 0) return stationary_hyper(k, px, qx);
            return stationary_hyper(k, join(ps, px), join(qs, qx));
        case KernelFamily::ProductContext: {
            const KernelSpec& base = k.children.at(0);
            const double kb = plain_eval(base, empty_vector(), px, empty_vector(), qx, nullptr, nullptr);
            const Vector hb = plain_hyper(base, empty_vector(), px, empty_vector(), qx);
            if (const KernelSpec* ctx = k.context_kernel()) {
                const double kc = plain_eval(*ctx, empty_vector(), ps, empty_vector(), qs, nullptr, nullptr);
                const Vector hc = plain_hyper(*ctx, empty_vector(), ps, empty_vector(), qs);
                Vector out(hb.size() + hc.size());
                out << kc * hb, kb * hc;
                return out;
            }
            return ps.dot(qs) * hb;
        }
        case KernelFamily::LinearContextSum: {
            const Vector hb = plain_hyper(k.children.at(0), empty_vector(), px, empty_vector(), qx);
            Vector out(hb.size() + 1);
            out << k.context_slope * ps.dot(qs), hb;
            return out;
        }
        case KernelFamily::Preference:
            break;
    }
    throw std::logic_error("preference kernel cannot be nested");
}

// A preference input expands into signed plain points: the duel (x, x2) is
// f(s, x) - f(s, x2), a plain point is f(s, x).
struct Term {
    double sign;
    const Vector* x;
    bool second;
};

int expand(const InputPoint& p, Term (&terms)[2]) {
    terms[0] = {1.0, &p.x, false};
    if (!p.x2) return 1;
    terms[1] = {-1.0, &*p.x2, true};
    return 2;
}

void count_hyper(const KernelSpec& k, int& n) {
    switch (k.family) {
        case KernelFamily::SquaredExponential:
        case KernelFamily::Matern32:
        case KernelFamily::Matern52:
            n += static_cast<int>(k.lengthscales.size()) + 1;
            return;
        case KernelFamily::LinearContextSum:
            n += 1;
            break;
        default:
            break;
    }
    for (const auto& c : k.children) count_hyper(c, n);
}

void collect_hyper(const KernelSpec& k, std::vector<double>& out, std::vector<std::string>* names,
                   const std::string& prefix) {
    switch (k.family) {
        case KernelFamily::SquaredExponential:
        case KernelFamily::Matern32:
        case KernelFamily::Matern52:
            for (Eigen::Index i = 0; i < k.lengthscales.size(); ++i) {
                out.push_back(std::log(k.lengthscales[i]));
                if (names) names->push_back(prefix + "lengthscale[" + std::to_string(i) + "]");
            }
            out.push_back(std::log(k.variance));
            if (names) names->push_back(prefix + "variance");
            return;
        case KernelFamily::LinearContextSum:
            out.push_back(std::log(k.context_slope));
            if (names) names->push_back(prefix + "context_slope");
            break;
        default:
            break;
    }
    for (std::size_t i = 0; i < k.children.size(); ++i)
        collect_hyper(k.children[i], out, names, prefix + (i == 0 ? "base." : "context."));
}

void assign_hyper(KernelSpec& k, const Vector& v, Eigen::Index& pos) {
    switch (k.family) {
        case KernelFamily::SquaredExponential:
        case KernelFamily::Matern32:
        case KernelFamily::Matern52:
            for (Eigen::Index i = 0; i < k.lengthscales.size(); ++i) k.lengthscales[i] = std::exp(v[pos++]);
            k.variance = std::exp(v[pos++]);
            return;
        case KernelFamily::LinearContextSum:
            k.context_slope = std::exp(v[pos++]);
            break;
        default:
            break;
    }
    for (auto& c : k.children) assign_hyper(c, v, pos);
}

}  // namespace

std::string to_string(KernelFamily family) {
    switch (family) {
        case KernelFamily::SquaredExponential: return "se-ard";
        case KernelFamily::Matern32: return "matern32";
        case KernelFamily::Matern52: return "matern52";
        case KernelFamily::ProductContext: return "product-context";
        case KernelFamily::LinearContextSum: return "linear-context-sum";
        case KernelFamily::Preference: return "preference";
    }
    return "unknown";
}

KernelFamily kernel_family_from_string(const std::string& name) {
    for (auto f : {KernelFamily::SquaredExponential, KernelFamily::Matern32, KernelFamily::Matern52,
                   KernelFamily::ProductContext, KernelFamily::LinearContextSum, KernelFamily::Preference})
        if (to_string(f) == name) return f;
    throw std::invalid_argument("unknown kernel family '" + name + "'");
}

bool KernelSpec::is_stationary() const {
    return family == KernelFamily::SquaredExponential || family == KernelFamily::Matern32 ||
           family == KernelFamily::Matern52;
}

const KernelSpec& KernelSpec::base() const {
    if (children.empty()) throw std::logic_error(to_string(family) + " kernel has no base kernel");
    return children.front();
}

const KernelSpec* KernelSpec::context_kernel() const {
    return (family == KernelFamily::ProductContext && children.size() > 1) ? &children[1] : nullptr;
}

const KernelSpec& KernelSpec::parameter_kernel() const {
    return is_stationary() ? *this : base().parameter_kernel();
}

KernelSpec stationary_kernel(KernelFamily family, Vector lengthscales, double variance) {
    KernelSpec k;
    k.family = family;
    k.lengthscales = std::move(lengthscales);
    k.variance = variance;
    if (!k.is_stationary()) throw std::invalid_argument("stationary_kernel: composite family requested");
    validate(k);
    return k;
}

KernelSpec squared_exponential(Vector lengthscales, double variance) {
    return stationary_kernel(KernelFamily::SquaredExponential, std::move(lengthscales), variance);
}
KernelSpec matern32(Vector lengthscales, double variance) {
    return stationary_kernel(KernelFamily::Matern32, std::move(lengthscales), variance);
}
KernelSpec matern52(Vector lengthscales, double variance) {
    return stationary_kernel(KernelFamily::Matern52, std::move(lengthscales), variance);
}

KernelSpec product_context(KernelSpec base) {
    KernelSpec k;
    k.family = KernelFamily::ProductContext;
    k.children.push_back(std::move(base));
    validate(k);
    return k;
}

KernelSpec product_context(KernelSpec context, KernelSpec base) {
    KernelSpec k;
    k.family = KernelFamily::ProductContext;
    k.children.push_back(std::move(base));
    k.children.push_back(std::move(context));
    validate(k);
    return k;
}

KernelSpec linear_context_sum(double theta, KernelSpec base) {
    KernelSpec k;
    k.family = KernelFamily::LinearContextSum;
    k.context_slope = theta;
    k.children.push_back(std::move(base));
    validate(k);
    return k;
}

KernelSpec preference(KernelSpec base) {
    KernelSpec k;
    k.family = KernelFamily::Preference;
    k.children.push_back(std::move(base));
    validate(k);
    return k;
}

void validate(const KernelSpec& k) {
    if (k.is_stationary()) {
        if (k.lengthscales.size() == 0) throw std::invalid_argument("stationary kernel needs lengthscales");
        if (!(k.lengthscales.array() > 0.0).all() || !k.lengthscales.allFinite())
            throw std::invalid_argument("lengthscales must be strictly positive");
        if (!(k.variance > 0.0) || !std::isfinite(k.variance))
            throw std::invalid_argument("signal variance must be strictly positive");
        if (!k.children.empty()) throw std::invalid_argument("stationary kernel cannot have children");
        return;
    }
    switch (k.family) {
        case KernelFamily::ProductContext:
            if (k.children.empty() || k.children.size() > 2)
                throw std::invalid_argument("product-context kernel needs a base and optional context kernel");
            if (k.children.size() == 2 && !k.children[1].is_stationary())
                throw std::invalid_argument("context kernel must be stationary");
            break;
        case KernelFamily::LinearContextSum:
            if (k.children.size() != 1) throw std::invalid_argument("linear-context-sum needs one base kernel");
            if (!(k.context_slope > 0.0) || !std::isfinite(k.context_slope))
                throw std::invalid_argument("context slope must be strictly positive");
            break;
        case KernelFamily::Preference:
            if (k.children.size() != 1) throw std::invalid_argument("preference kernel needs one base kernel");
            break;
        default:
            break;
    }
    for (const auto& c : k.children) {
        if (c.family == KernelFamily::Preference) throw std::invalid_argument("preference kernel cannot be nested");
        if (k.family != KernelFamily::Preference && !c.is_stationary())
            throw std::invalid_argument("context composites take stationary factors");
        validate(c);
    }
}

void check_dimensions(const KernelSpec& spec, const InputPoint& p) {
    if (spec.family != KernelFamily::Preference && p.is_duel())
        throw DimensionError("duel input given to a non-preference kernel");
    const KernelSpec& k = spec.family == KernelFamily::Preference ? spec.base() : spec;
    const auto ds = p.s.size();
    const auto dx = p.x.size();
    switch (k.family) {
        case KernelFamily::SquaredExponential:
        case KernelFamily::Matern32:
        case KernelFamily::Matern52:
            if (k.lengthscales.size() != ds + dx) throw DimensionError("point dimension does not match kernel");
            return;
        case KernelFamily::ProductContext:
            if (k.base().lengthscales.size() != dx) throw DimensionError("parameter dimension does not match kernel");
            if (const auto* c = k.context_kernel(); c && c->lengthscales.size() != ds)
                throw DimensionError("context dimension does not match kernel");
            return;
        case KernelFamily::LinearContextSum:
            if (k.base().lengthscales.size() != dx) throw DimensionError("parameter dimension does not match kernel");
            return;
        default:
            return;
    }
}

double kernel_eval(const KernelSpec& spec, const InputPoint& p, const InputPoint& q) {
    if (spec.family != KernelFamily::Preference) {
        if (p.is_duel() || q.is_duel()) throw DimensionError("duel input given to a non-preference kernel");
        return plain_eval(spec, p.s, p.x, q.s, q.x, nullptr, nullptr);
    }
    // Grouped as (row for x) - (row for x2) so swapping either duel negates exactly.
    const KernelSpec& base = spec.base();
    auto row = [&](const Vector& px) {
        const double first = plain_eval(base, p.s, px, q.s, q.x, nullptr, nullptr);
        return q.x2 ? first - plain_eval(base, p.s, px, q.s, *q.x2, nullptr, nullptr) : first;
    };
    const double first = row(p.x);
    return p.x2 ? first - row(*p.x2) : first;
}

Vector kernel_grad_x(const KernelSpec& spec, const InputPoint& p, const InputPoint& q) {
    const auto ds = p.s.size();
    const auto dx = p.x.size();
    Vector out = Vector::Zero(p.coord_dim());
    Vector gs, gx;
    if (spec.family != KernelFamily::Preference) {
        if (p.is_duel() || q.is_duel()) throw DimensionError("duel input given to a non-preference kernel");
        plain_eval(spec, p.s, p.x, q.s, q.x, &gs, &gx);
        out.head(ds) = gs;
        out.segment(ds, dx) = gx;
        return out;
    }
    const KernelSpec& base = spec.base();
    Term tp[2], tq[2];
    const int np = expand(p, tp);
    const int nq = expand(q, tq);
    for (int a = 0; a < np; ++a) {
        for (int b = 0; b < nq; ++b) {
            plain_eval(base, p.s, *tp[a].x, q.s, *tq[b].x, &gs, &gx);
            const double sign = tp[a].sign * tq[b].sign;
            out.head(ds) += sign * gs;
            out.segment(tp[a].second ? ds + dx : ds, dx) += sign * gx;
        }
    }
    return out;
}

Vector kernel_grad_hyper(const KernelSpec& spec, const InputPoint& p, const InputPoint& q) {
    if (spec.family != KernelFamily::Preference) {
        if (p.is_duel() || q.is_duel()) throw DimensionError("duel input given to a non-preference kernel");
        return plain_hyper(spec, p.s, p.x, q.s, q.x);
    }
    const KernelSpec& base = spec.base();
    Term tp[2], tq[2];
    const int np = expand(p, tp);
    const int nq = expand(q, tq);
    Vector out;
    for (int a = 0; a < np; ++a) {
        for (int b = 0; b < nq; ++b) {
            const Vector h = tp[a].sign * tq[b].sign * plain_hyper(base, p.s, *tp[a].x, q.s, *tq[b].x);
            if (out.size() == 0) out = h;
            else out += h;
        }
    }
    return out;
}

Vector log_hyperparameters(const KernelSpec& spec) {
    std::vector<double> v;
    collect_hyper(spec, v, nullptr, "");
    return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::vector<std::string> hyperparameter_names(const KernelSpec& spec) {
    std::vector<double> v;
    std::vector<std::string> names;
    collect_hyper(spec, v, &names, "");
    return names;
}

KernelSpec with_log_hyperparameters(const KernelSpec& spec, const Vector& log_params) {
    int n = 0;
    count_hyper(spec, n);
    if (log_params.size() != n)
        throw DimensionError("expected " + std::to_string(n) + " hyperparameters, got " +
                             std::to_string(log_params.size()));
    KernelSpec out = spec;
    Eigen::Index pos = 0;
    assign_hyper(out, log_params, pos);
    validate(out);
    return out;
}

Matrix gram_matrix(const KernelSpec& spec, const std::vector<InputPoint>& points, double jitter) {
    const auto n = static_cast<Eigen::Index>(points.size());
    Matrix K(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j <= i; ++j) {
            K(i, j) = kernel_eval(spec, points[i], points[j]);
            K(j, i) = K(i, j);
        }
        K(i, i) += jitter;
    }
    return K;
}

Vector cross_covariance(const KernelSpec& spec, const std::vector<InputPoint>& points, const InputPoint& q) {
    Vector k(static_cast<Eigen::Index>(points.size()));
    for (std::size_t i = 0; i < points.size(); ++i) k[static_cast<Eigen::Index>(i)] = kernel_eval(spec, points[i], q);
    return k;
}

double default_jitter(const KernelSpec& spec) { return 1e-9 * spec.parameter_kernel().variance; }

}  // namespace cbo
