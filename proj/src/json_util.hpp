#pragma once

// Internal JSON helpers shared by the manifest writers; not installed.

#include <json.hpp>

#include "wspkit/anno.hpp"

namespace wspkit::detail {

nlohmann::ordered_json person_to_json(const PersonInstance& p);
PersonInstance person_from_json(const nlohmann::ordered_json& jp);

}  // namespace wspkit::detail
