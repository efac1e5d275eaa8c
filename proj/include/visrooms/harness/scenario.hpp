#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "visrooms/graph/operation.hpp"
#include "visrooms/sync/room_config.hpp"

namespace visrooms {

class ScriptError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Relative weight per op kind, indexed by OpKind.
using OpMix = std::array<double, kOpKindCount>;

/// Node ops over link ops over merges, with document reading in between.
OpMix defaultOpMix();

struct ScriptedOp {
  /// Virtual time the client sends it (held until the client has joined).
  std::int64_t atMs = 0;
  OpPayload payload;
};

struct RandomBehavior {
  std::uint64_t seed = 0;
  OpMix mix = defaultOpMix();
  int count = 0;
  /// Mean gap between a client's ops.
  std::int64_t meanIntervalMs = 200;
};

struct ClientScript {
  std::string name;
  Platform platform = Platform::Flat2d;
  std::variant<std::vector<ScriptedOp>, RandomBehavior> behavior;
  std::int64_t joinAtMs = 0;
  /// Cursor (and, for spatial clients, head pose) publication period; 0 = none.
  std::int64_t awarenessIntervalMs = 100;
};

struct NetworkModel {
  std::int64_t latencyMinMs = 0;
  std::int64_t latencyMaxMs = 0;
  std::int64_t jitterMs = 0;
  /// Probability that one Awareness message is lost. Ops are never lost.
  double dropAwarenessProb = 0.0;
};

/// {seed?, corpus, network, clients:[{name, platform, joinAtMs?,
///  awarenessIntervalMs?, script:[{at, kind, payload}] |
///  random:{seed?, count, meanIntervalMs?, mix?:{kind: weight}}}]}
struct ScenarioScript {
  std::uint64_t seed = 0;
  RoomConfig room;
  NetworkModel network;
  std::vector<ClientScript> clients;
};

/// Throws ScriptError. `baseDir` resolves a relative corpus path.
ScenarioScript scenarioFromJson(const nlohmann::json& j,
                                const std::filesystem::path& baseDir = {});
nlohmann::json scenarioToJson(const ScenarioScript& s);
ScenarioScript loadScenario(const std::filesystem::path& path);

}  // namespace visrooms
