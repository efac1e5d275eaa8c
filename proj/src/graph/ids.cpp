#include "visrooms/graph/ids.hpp"

#include <stdexcept>

namespace visrooms {

const char* platformName(Platform p) {
  return p == Platform::Flat2d ? "flat2d" : "spatial3d";
}

Platform parsePlatform(const std::string& s) {
  if (s == "flat2d") return Platform::Flat2d;
  if (s == "spatial3d") return Platform::Spatial3d;
  throw std::invalid_argument("unknown platform '" + s + "'");
}

}  // namespace visrooms
