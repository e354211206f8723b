#include "cbo/features.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include <cmath>
#include <numbers>
#include <queue>
#include <set>
#include <stdexcept>

namespace cbo {

namespace {

using ConstRef = Eigen::Ref<const Vector>;

double matern_nu(KernelFamily f) { return f == KernelFamily::Matern32 ? 1.5 : 2.5; }

// sin(k a) and cos(k a) for k = 1..m.
void harmonic_table(double a, int m, std::vector<double>& sines, std::vector<double>& cosines) {
    sines.resize(static_cast<std::size_t>(m) + 1);
    cosines.resize(static_cast<std::size_t>(m) + 1);
    for (int k = 1; k <= m; ++k) {
        sines[static_cast<std::size_t>(k)] = std::sin(k * a);
        cosines[static_cast<std::size_t>(k)] = std::cos(k * a);
    }
}

Vector kron(const Vector& a, const Vector& b) {
    Vector out(a.size() * b.size());
    for (Eigen::Index i = 0; i < a.size(); ++i) out.segment(i * b.size(), b.size()) = a[i] * b;
    return out;
}

}  // namespace

double spectral_weight(const KernelSpec& k, const Vector& omega) {
    if (!k.is_stationary()) throw std::invalid_argument("spectral density needs a stationary kernel");
    const auto d = static_cast<double>(omega.size());
    const Vector w = k.lengthscales.cwiseProduct(omega);
    const double r2 = w.squaredNorm();
    const double scale = k.variance * k.lengthscales.prod();
    double s0 = 0.0;
    if (k.family == KernelFamily::SquaredExponential) {
        s0 = std::pow(2.0 * std::numbers::pi, 0.5 * d) * std::exp(-0.5 * r2);
    } else {
        const double nu = matern_nu(k.family);
        const double log_c = d * std::log(2.0) + 0.5 * d * std::log(std::numbers::pi) +
                             boost::math::lgamma(nu + 0.5 * d) - boost::math::lgamma(nu) + nu * std::log(2.0 * nu);
        s0 = std::exp(log_c - (nu + 0.5 * d) * std::log(2.0 * nu + r2));
    }
    return std::sqrt(scale * s0);
}

HilbertBasis::HilbertBasis(const KernelSpec& k, const Box& box, int rank, double boundary_factor) {
    if (!k.is_stationary()) throw std::invalid_argument("Hilbert basis needs a stationary kernel");
    if (rank < 1) throw std::invalid_argument("feature rank must be at least 1");
    if (boundary_factor <= 1.0) throw std::invalid_argument("boundary factor must exceed 1");
    const auto d = box.dim();
    if (k.lengthscales.size() != d) throw DimensionError("basis box does not match the kernel dimension");
    center_ = box.center();
    half_width_ = (boundary_factor * 0.5 * box.width()).cwiseMax(1e-9);

    // Best-first walk of the frequency lattice by ascending |l * omega|, which
    // orders SE and Matern spectral densities from the largest down.
    auto key = [&](const std::vector<int>& j) {
        double q = 0.0;
        for (Eigen::Index i = 0; i < d; ++i) {
            const double w = k.lengthscales[i] * std::numbers::pi * j[static_cast<std::size_t>(i)] / (2.0 * half_width_[i]);
            q += w * w;
        }
        return q;
    };
    using Entry = std::pair<double, std::vector<int>>;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> frontier;
    std::set<std::vector<int>> seen;
    const std::vector<int> first(static_cast<std::size_t>(d), 1);
    frontier.emplace(key(first), first);
    seen.insert(first);
    std::vector<std::vector<int>> chosen;
    while (static_cast<int>(chosen.size()) < rank && !frontier.empty()) {
        Entry e = frontier.top();
        frontier.pop();
        for (std::size_t i = 0; i < e.second.size(); ++i) {
            std::vector<int> next = e.second;
            ++next[i];
            if (seen.insert(next).second) frontier.emplace(key(next), next);
        }
        chosen.push_back(std::move(e.second));
    }

    const auto R = static_cast<Eigen::Index>(chosen.size());
    index_.resize(d, R);
    weights_.resize(R);
    const double norm = half_width_.array().rsqrt().prod();
    for (Eigen::Index r = 0; r < R; ++r) {
        Vector omega(d);
        for (Eigen::Index i = 0; i < d; ++i) {
            index_(i, r) = chosen[static_cast<std::size_t>(r)][static_cast<std::size_t>(i)];
            omega[i] = std::numbers::pi * index_(i, r) / (2.0 * half_width_[i]);
        }
        weights_[r] = norm * spectral_weight(k, omega);
    }
}

Vector HilbertBasis::eval(const ConstRef& z) const {
    Vector values;
    jacobian(z, &values);
    return values;
}

Matrix HilbertBasis::jacobian(const ConstRef& z, Vector* values) const {
    const auto d = dim();
    const auto R = rank();
    if (z.size() != d) throw DimensionError("feature input has the wrong dimension");
    std::vector<std::vector<double>> sn(static_cast<std::size_t>(d)), cs(static_cast<std::size_t>(d));
    Vector freq_scale(d);
    for (Eigen::Index i = 0; i < d; ++i) {
        const double a = std::numbers::pi * (z[i] - center_[i] + half_width_[i]) / (2.0 * half_width_[i]);
        harmonic_table(a, index_.row(i).maxCoeff(), sn[static_cast<std::size_t>(i)], cs[static_cast<std::size_t>(i)]);
        freq_scale[i] = std::numbers::pi / (2.0 * half_width_[i]);
    }
    Matrix J(R, d);
    if (values) values->resize(R);
    for (Eigen::Index r = 0; r < R; ++r) {
        double prod = weights_[r];
        for (Eigen::Index i = 0; i < d; ++i) prod *= sn[static_cast<std::size_t>(i)][static_cast<std::size_t>(index_(i, r))];
        if (values) (*values)[r] = prod;
        for (Eigen::Index i = 0; i < d; ++i) {
            double g = weights_[r] * index_(i, r) * freq_scale[i] *
                       cs[static_cast<std::size_t>(i)][static_cast<std::size_t>(index_(i, r))];
            for (Eigen::Index m = 0; m < d; ++m)
                if (m != i) g *= sn[static_cast<std::size_t>(m)][static_cast<std::size_t>(index_(m, r))];
            J(r, i) = g;
        }
    }
    return J;
}

int default_rank(Eigen::Index dim, int per_dim, int max_rank) {
    long long r = 1;
    for (Eigen::Index i = 0; i < dim && r < max_rank; ++i) r *= per_dim;
    return static_cast<int>(std::min<long long>(r, max_rank));
}

FeatureMap build_feature_map(const KernelSpec& kernel, const Box& context_box, const Box& param_box, int rank_per_dim,
                             int max_rank) {
    validate(kernel);
    FeatureMap m;
    m.kernel_ = kernel;
    m.preference_ = kernel.family == KernelFamily::Preference;
    const KernelSpec& k = m.preference_ ? kernel.base() : kernel;
    m.ds_ = context_box.dim();
    m.dx_ = param_box.dim();
    switch (k.family) {
        case KernelFamily::SquaredExponential:
        case KernelFamily::Matern32:
        case KernelFamily::Matern52: {
            m.layout_ = FeatureMap::Layout::Joint;
            const Box joint = concat(context_box, param_box);
            m.param_ = HilbertBasis(k, joint, default_rank(joint.dim(), rank_per_dim, max_rank));
            break;
        }
        case KernelFamily::ProductContext:
            if (const KernelSpec* ctx = k.context_kernel()) {
                m.layout_ = FeatureMap::Layout::ContextKernel;
                const int rs = default_rank(m.ds_, rank_per_dim, std::min(32, max_rank));
                m.context_ = HilbertBasis(*ctx, context_box, rs);
                m.param_ = HilbertBasis(k.base(), param_box,
                                        default_rank(m.dx_, rank_per_dim, std::max(1, max_rank / rs)));
            } else {
                m.layout_ = FeatureMap::Layout::ContextDot;
                m.param_ = HilbertBasis(k.base(), param_box, default_rank(m.dx_, rank_per_dim, max_rank));
            }
            break;
        case KernelFamily::LinearContextSum:
            m.layout_ = FeatureMap::Layout::LinearSum;
            m.sqrt_theta_ = std::sqrt(k.context_slope);
            m.param_ = HilbertBasis(k.base(), param_box, default_rank(m.dx_, rank_per_dim, max_rank));
            break;
        case KernelFamily::Preference:
            throw std::invalid_argument("preference kernel cannot be nested");
    }
    return m;
}

Eigen::Index FeatureMap::rank() const {
    switch (layout_) {
        case Layout::Joint: return param_.rank();
        case Layout::ContextDot: return ds_ * param_.rank();
        case Layout::ContextKernel: return context_.rank() * param_.rank();
        case Layout::LinearSum: return ds_ + param_.rank();
    }
    return 0;
}

Vector FeatureMap::plain_features(const Vector& s, const Vector& x, Matrix* jac_s, Matrix* jac_x) const {
    if (s.size() != ds_ || x.size() != dx_) throw DimensionError("point does not match the feature map");
    const bool grad = jac_s || jac_x;
    switch (layout_) {
        case Layout::Joint: {
            Vector z(ds_ + dx_);
            z << s, x;
            Vector v;
            if (!grad) return param_.eval(z);
            const Matrix J = param_.jacobian(z, &v);
            if (jac_s) *jac_s = J.leftCols(ds_);
            if (jac_x) *jac_x = J.rightCols(dx_);
            return v;
        }
        case Layout::ContextDot: {
            Vector px;
            const Matrix Jx = grad ? param_.jacobian(x, &px) : Matrix();
            if (!grad) px = param_.eval(x);
            const auto R = param_.rank();
            if (jac_s) {
                jac_s->setZero(ds_ * R, ds_);
                for (Eigen::Index i = 0; i < ds_; ++i) jac_s->block(i * R, i, R, 1) = px;
            }
            if (jac_x) {
                jac_x->resize(ds_ * R, dx_);
                for (Eigen::Index i = 0; i < ds_; ++i) jac_x->middleRows(i * R, R) = s[i] * Jx;
            }
            return kron(s, px);
        }
        case Layout::ContextKernel: {
            Vector ps, px;
            const Matrix Js = grad ? context_.jacobian(s, &ps) : Matrix();
            const Matrix Jx = grad ? param_.jacobian(x, &px) : Matrix();
            if (!grad) {
                ps = context_.eval(s);
                px = param_.eval(x);
            }
            const auto Rs = context_.rank(), Rx = param_.rank();
            if (jac_s) {
                jac_s->resize(Rs * Rx, ds_);
                for (Eigen::Index i = 0; i < Rs; ++i) jac_s->middleRows(i * Rx, Rx) = px * Js.row(i);
            }
            if (jac_x) {
                jac_x->resize(Rs * Rx, dx_);
                for (Eigen::Index i = 0; i < Rs; ++i) jac_x->middleRows(i * Rx, Rx) = ps[i] * Jx;
            }
            return kron(ps, px);
        }
        case Layout::LinearSum: {
            Vector px;
            const Matrix Jx = grad ? param_.jacobian(x, &px) : Matrix();
            if (!grad) px = param_.eval(x);
            const auto R = param_.rank();
            Vector out(ds_ + R);
            out << sqrt_theta_ * s, px;
            if (jac_s) {
                jac_s->setZero(ds_ + R, ds_);
                jac_s->topRows(ds_).diagonal().setConstant(sqrt_theta_);
            }
            if (jac_x) {
                jac_x->setZero(ds_ + R, dx_);
                jac_x->bottomRows(R) = Jx;
            }
            return out;
        }
    }
    return {};
}

Vector FeatureMap::features(const InputPoint& p) const {
    if (p.is_duel()) {
        if (!preference_) throw DimensionError("duel input given to a non-preference feature map");
        return plain_features(p.s, p.x, nullptr, nullptr) - plain_features(p.s, *p.x2, nullptr, nullptr);
    }
    return plain_features(p.s, p.x, nullptr, nullptr);
}

Matrix FeatureMap::jacobian(const InputPoint& p) const {
    Matrix js, jx;
    plain_features(p.s, p.x, &js, &jx);
    Matrix J(rank(), p.coord_dim());
    J.leftCols(ds_) = js;
    J.middleCols(ds_, dx_) = jx;
    if (p.is_duel()) {
        if (!preference_) throw DimensionError("duel input given to a non-preference feature map");
        Matrix js2, jx2;
        plain_features(p.s, *p.x2, &js2, &jx2);
        J.leftCols(ds_) -= js2;
        J.rightCols(dx_) = -jx2;
    }
    return J;
}

Matrix FeatureMap::design(const std::vector<InputPoint>& points) const {
    Matrix Phi(static_cast<Eigen::Index>(points.size()), rank());
    for (std::size_t i = 0; i < points.size(); ++i) Phi.row(static_cast<Eigen::Index>(i)) = features(points[i]).transpose();
    return Phi;
}

Vector preference_features(const FeatureMap& map, const Vector& s, const Vector& xi, const Vector& xj) {
    return map.features(make_point(s, xi)) - map.features(make_point(s, xj));
}

}  // namespace cbo
