#include "spanel/assets.hpp"

#include "spanel/error.hpp"

namespace spanel::assets {

std::string_view get(const std::string& name) {
  const auto& table = all();
  auto it = table.find(name);
  if (it == table.end()) throw Error(ErrorCode::kNotFound, "assets", "no embedded asset '" + name + "'", name);
  return it->second;
}

}  // namespace spanel::assets
