#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "visrooms/sync/room.hpp"

namespace visrooms {

/// What a client reconstructs from the stream: a snapshot followed by
/// OpApplied deltas in version order. Deltas that arrive ahead of a gap are
/// held back until the gap fills.
class ClientReplica {
 public:
  /// Replaces everything with a StateSnapshot body (or JoinAck's snapshot).
  void loadSnapshot(const nlohmann::json& snapshot);
  bool hasSnapshot() const { return loaded_; }

  void onOpApplied(const nlohmann::json& body);
  void onAwareness(const nlohmann::json& body);

  const GraphState& graph() const { return graph_; }
  const LayoutResult& layout() const { return layout_; }
  const std::map<UserId, UserSession>& peers() const { return peers_; }
  std::uint64_t version() const { return graph_.version(); }
  /// Graph version of the last snapshot loaded.
  std::uint64_t snapshotVersion() const { return snapshotVersion_; }
  std::string stateHash() const { return visrooms::stateHash(graph_); }

  /// Seqs of the ops applied through deltas, in application order.
  const std::vector<std::uint64_t>& appliedSeqs() const { return appliedSeqs_; }
  std::size_t pendingDeltas() const { return pending_.size(); }
  /// Awareness entries that carried an older timestamp than one already
  /// seen for the same user and field. They are ignored.
  std::size_t staleAwareness() const { return stale_; }

 private:
  void applyReady();

  bool loaded_ = false;
  std::uint64_t snapshotVersion_ = 0;
  GraphState graph_;
  LayoutResult layout_;
  std::map<UserId, UserSession> peers_;
  std::map<std::uint64_t, nlohmann::json> pending_;
  std::vector<std::uint64_t> appliedSeqs_;
  // Newest timestamps seen per user: cursor, head pose.
  std::map<UserId, std::pair<std::int64_t, std::int64_t>> seen_;
  std::size_t stale_ = 0;
};

}  // namespace visrooms
