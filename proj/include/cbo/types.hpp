#pragma once

#include <Eigen/Dense>

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace cbo {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// A query location: test context `s`, parameters `x` and, for preferential
/// observations, the challenger `x2` of the duel (x, x2).
struct InputPoint {
    Vector s;
    Vector x;
    std::optional<Vector> x2;

    bool is_duel() const { return x2.has_value(); }
    Eigen::Index context_dim() const { return s.size(); }
    Eigen::Index param_dim() const { return x.size(); }
    /// Number of coordinates gradients are taken against: [s, x, x2].
    Eigen::Index coord_dim() const { return s.size() + x.size() + (x2 ? x2->size() : 0); }
};

InputPoint make_point(Vector s, Vector x);
InputPoint make_duel(Vector s, Vector x, Vector x2);

/// Concatenated coordinates [s; x; x2].
Vector flatten(const InputPoint& p);
/// Inverse of flatten, using `like` for the block sizes.
InputPoint unflatten(const Vector& coords, const InputPoint& like);

struct BinaryObservation {
    InputPoint point;
    int outcome = 0;
};

/// Axis-aligned box [lower, upper].
struct Box {
    Vector lower;
    Vector upper;

    Box() = default;
    Box(Vector lo, Vector hi);
    static Box unit(Eigen::Index dim);
    static Box cube(Eigen::Index dim, double lo, double hi);

    Eigen::Index dim() const { return lower.size(); }
    Vector center() const { return 0.5 * (lower + upper); }
    Vector width() const { return upper - lower; }
    bool contains(const Vector& v, double tol = 0.0) const;
    Vector clamp(const Vector& v) const;
    /// Clamp into the box shrunk by `rel` of the width on each side.
    Vector clamp_interior(const Vector& v, double rel = 1e-9) const;
    /// Map a point of [0,1]^d onto the box.
    Vector from_unit(const Vector& u) const;
};

/// Cartesian product of two boxes.
Box concat(const Box& a, const Box& b);

class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, double residual)
        : std::runtime_error(what), residual_(residual) {}
    double residual() const { return residual_; }

private:
    double residual_;
};

}  // namespace cbo
