#pragma once

#include <json.hpp>

#include "mtp2/models.hpp"

namespace mtp2::detail {

ModelSpec model_from_json(const nlohmann::json& j);
nlohmann::json model_to_json(const ModelSpec& spec);

}  // namespace mtp2::detail
