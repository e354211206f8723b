#pragma once

#include "cbo/kernel.hpp"
#include "cbo/types.hpp"

#include <json.hpp>

#include <optional>
#include <string>

namespace cbo::json {

using nlohmann::json;

/// Finite doubles as numbers; infinities and NaN as the strings "inf", "-inf", "nan".
json number(double v);
double to_number(const json& j);

json vector(const Vector& v);
Vector to_vector(const json& j);

json optional_vector(const std::optional<Vector>& v);
std::optional<Vector> to_optional_vector(const json& j);

json kernel(const KernelSpec& k);
KernelSpec to_kernel(const json& j);

}  // namespace cbo::json
