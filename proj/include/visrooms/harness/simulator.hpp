#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>

#include "visrooms/harness/metrics.hpp"
#include "visrooms/harness/scenario.hpp"
#include "visrooms/sync/hub.hpp"

namespace visrooms {

/// Virtual time a run keeps going after the last op outcome is delivered.
inline constexpr std::int64_t kQuiescenceWindowMs = 2000;

struct SimulationOptions {
  /// Overrides the script's seed.
  std::optional<std::uint64_t> seed;
  /// Persist the room log here (`<roomId>.oplog.ndjson`).
  std::optional<std::filesystem::path> logDir;
  /// Pace events against the real clock instead of running flat out.
  bool wallClock = false;
};

struct ClientOutcome {
  std::string stateHash;
  std::uint64_t version = 0;
  std::uint64_t rejectedSeen = 0;
  std::size_t awarenessReceived = 0;
  std::size_t staleAwareness = 0;
};

struct SimulationResult {
  MetricsReport report;
  std::string serverStateHash;
  std::uint64_t serverVersion = 0;
  std::uint64_t opsSequenced = 0;
  std::map<std::string, ClientOutcome> clients;
  /// Lowest seq some client missed or saw out of order; set iff not converged.
  std::optional<std::uint64_t> firstDivergentSeq;
  std::optional<std::filesystem::path> logPath;
};

class NonConvergence : public std::runtime_error {
 public:
  NonConvergence(SimulationResult result, const std::string& what)
      : std::runtime_error(what), result_(std::move(result)) {}
  const SimulationResult& result() const { return result_; }

 private:
  SimulationResult result_;
};

/// Runs the script in process against a Hub, with every message crossing a
/// simulated network: per-direction FIFO links with sampled latency, and
/// Awareness messages dropped at the configured rate. Deterministic in the
/// script and seed. The result's convergence flag is false when any client
/// ends with a different state than the server.
SimulationResult simulate(const ScenarioScript& script, const SimulationOptions& options = {});

/// simulate(), throwing NonConvergence instead of returning a diverged run.
SimulationResult runScenario(const ScenarioScript& script, const SimulationOptions& options = {});

}  // namespace visrooms
