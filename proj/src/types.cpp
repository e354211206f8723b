#include "cbo/types.hpp"

namespace cbo {

InputPoint make_point(Vector s, Vector x) { return InputPoint{std::move(s), std::move(x), std::nullopt}; }

InputPoint make_duel(Vector s, Vector x, Vector x2) {
    if (x.size() != x2.size()) throw DimensionError("duel members have different dimensions");
    return InputPoint{std::move(s), std::move(x), std::move(x2)};
}

Vector flatten(const InputPoint& p) {
    Vector out(p.coord_dim());
    out << p.s, p.x, (p.x2 ? *p.x2 : Vector());
    return out;
}

InputPoint unflatten(const Vector& coords, const InputPoint& like) {
    if (coords.size() != like.coord_dim()) throw DimensionError("coordinate vector does not match point layout");
    const auto ds = like.s.size();
    const auto dx = like.x.size();
    InputPoint p{coords.head(ds), coords.segment(ds, dx), std::nullopt};
    if (like.x2) p.x2 = coords.tail(dx);
    return p;
}

Box::Box(Vector lo, Vector hi) : lower(std::move(lo)), upper(std::move(hi)) {
    if (lower.size() != upper.size()) throw DimensionError("box bounds have different dimensions");
    if ((upper.array() < lower.array()).any()) throw std::invalid_argument("box upper bound below lower bound");
}

Box Box::unit(Eigen::Index dim) { return Box(Vector::Zero(dim), Vector::Ones(dim)); }

Box Box::cube(Eigen::Index dim, double lo, double hi) {
    return Box(Vector::Constant(dim, lo), Vector::Constant(dim, hi));
}

bool Box::contains(const Vector& v, double tol) const {
    if (v.size() != dim()) return false;
    return ((v.array() >= lower.array() - tol) && (v.array() <= upper.array() + tol)).all();
}

Vector Box::clamp(const Vector& v) const { return v.cwiseMax(lower).cwiseMin(upper); }

Vector Box::clamp_interior(const Vector& v, double rel) const {
    const Vector margin = rel * width();
    return v.cwiseMax(lower + margin).cwiseMin(upper - margin);
}

Vector Box::from_unit(const Vector& u) const { return lower + u.cwiseProduct(width()); }

Box concat(const Box& a, const Box& b) {
    Vector lo(a.dim() + b.dim()), hi(a.dim() + b.dim());
    lo << a.lower, b.lower;
    hi << a.upper, b.upper;
    return Box(lo, hi);
}

}  // namespace cbo
