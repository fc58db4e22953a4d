#pragma once

#include <nlohmann/json.hpp>

namespace hsnas {

// Insertion-ordered so files list attributes in declaration order.
using Json = nlohmann::ordered_json;

}  // namespace hsnas
