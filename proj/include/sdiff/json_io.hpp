#pragma once

#include <json.hpp>

#include "sdiff/algebra.hpp"

namespace sdiff {

nlohmann::json field_to_json_value(const FieldCoeffs& u);
FieldCoeffs field_from_json_value(const nlohmann::json& j);

}  // namespace sdiff
