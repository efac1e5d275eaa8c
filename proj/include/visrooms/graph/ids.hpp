#pragma once

#include <compare>
#include <functional>
#include <string>

#include <json.hpp>

namespace visrooms {

/// Opaque string identifier, distinct per entity kind.
template <class Tag>
struct Id {
  std::string value;

  Id() = default;
  explicit Id(std::string v) : value(std::move(v)) {}

  bool empty() const { return value.empty(); }
  auto operator<=>(const Id&) const = default;
};

using NodeId = Id<struct NodeTag>;
using LinkId = Id<struct LinkTag>;
using UserId = Id<struct UserTag>;
using DocumentId = Id<struct DocumentTag>;

template <class Tag>
void to_json(nlohmann::json& j, const Id<Tag>& id) {
  j = id.value;
}

template <class Tag>
void from_json(const nlohmann::json& j, Id<Tag>& id) {
  id.value = j.get<std::string>();
}

enum class Platform { Flat2d, Spatial3d };

const char* platformName(Platform p);
Platform parsePlatform(const std::string& s);

}  // namespace visrooms

template <class Tag>
struct std::hash<visrooms::Id<Tag>> {
  std::size_t operator()(const visrooms::Id<Tag>& id) const noexcept {
    return std::hash<std::string>{}(id.value);
  }
};
