#pragma once

#include <map>
#include <string>
#include <string_view>

namespace spanel::assets {

// Text assets compiled in from assets/, keyed by their relative path.
const std::map<std::string, std::string_view>& all();

// Throws Error(kNotFound) for an unknown name.
std::string_view get(const std::string& name);

}  // namespace spanel::assets
