#include "cbo/json_io.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace cbo::json {

json number(double v) {
    if (std::isfinite(v)) return v;
    if (std::isnan(v)) return "nan";
    return v > 0 ? "inf" : "-inf";
}

double to_number(const json& j) {
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "inf") return std::numeric_limits<double>::infinity();
        if (s == "-inf") return -std::numeric_limits<double>::infinity();
        if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    }
    throw std::invalid_argument("expected a number, got " + j.dump());
}

json vector(const Vector& v) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(number(v[i]));
    return out;
}

Vector to_vector(const json& j) {
    if (!j.is_array()) throw std::invalid_argument("expected an array, got " + j.dump());
    Vector v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = to_number(j[i]);
    return v;
}

json optional_vector(const std::optional<Vector>& v) { return v ? vector(*v) : json(nullptr); }

std::optional<Vector> to_optional_vector(const json& j) {
    if (j.is_null()) return std::nullopt;
    return to_vector(j);
}

json kernel(const KernelSpec& k) {
    json out;
    out["family"] = to_string(k.family);
    if (k.is_stationary()) {
        out["lengthscales"] = vector(k.lengthscales);
        out["variance"] = number(k.variance);
    }
    if (k.family == KernelFamily::LinearContextSum) out["theta"] = number(k.context_slope);
    if (!k.children.empty()) {
        out["children"] = json::array();
        for (const auto& c : k.children) out["children"].push_back(kernel(c));
    }
    return out;
}

KernelSpec to_kernel(const json& j) {
    KernelSpec k;
    k.family = kernel_family_from_string(j.at("family").get<std::string>());
    if (k.is_stationary()) {
        k.lengthscales = to_vector(j.at("lengthscales"));
        k.variance = to_number(j.at("variance"));
    }
    if (j.contains("theta")) k.context_slope = to_number(j.at("theta"));
    if (j.contains("children"))
        for (const auto& c : j.at("children")) k.children.push_back(to_kernel(c));
    validate(k);
    return k;
}

}  // namespace cbo::json
