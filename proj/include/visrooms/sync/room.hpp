#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "visrooms/awareness/awareness.hpp"
#include "visrooms/graph/graph_state.hpp"
#include "visrooms/layout/layout.hpp"
#include "visrooms/sync/oplog.hpp"
#include "visrooms/sync/room_config.hpp"
#include "visrooms/sync/wire.hpp"

namespace visrooms {

/// Fixed palette, handed out lowest free slot first.
inline constexpr std::array<Rgb, 8> kPalette = {{{78, 121, 167},
                                                 {242, 142, 43},
                                                 {225, 87, 89},
                                                 {118, 183, 178},
                                                 {89, 161, 79},
                                                 {237, 201, 72},
                                                 {176, 122, 161},
                                                 {255, 157, 167}}};

struct UserSession {
  UserId id;
  std::string name;
  Rgb color;
  std::size_t colorSlot = 0;
  Platform platform = Platform::Flat2d;
  std::optional<DocumentId> currentDocument;
  std::optional<NodeId> selectedNode;
  std::optional<CursorHint> cursor;
  std::optional<HeadPose> headPose;
  std::int64_t headPoseTs = -1;
};

nlohmann::json sessionToJson(const UserSession& s);
UserSession sessionFromJson(const nlohmann::json& j);

/// Layout changes that accompany one applied op.
struct LayoutEntry {
  Vec3 position3;
  Vec2 position2;
  bool pinned = false;

  friend bool operator==(const LayoutEntry&, const LayoutEntry&) = default;
};

struct LayoutDelta {
  std::map<NodeId, LayoutEntry> upserts;
  std::vector<NodeId> removed;
  std::uint64_t version = 0;
};

nlohmann::json layoutDeltaToJson(const LayoutDelta& d);
LayoutDelta layoutDeltaFromJson(const nlohmann::json& j);
/// Entries that differ between two layouts, tagged with `after.version`.
LayoutDelta diffLayouts(const LayoutResult& before, const LayoutResult& after);
void applyLayoutDelta(LayoutResult& layout, const LayoutDelta& d);

struct SubmitOutcome {
  LoggedOp entry;
  GraphDelta graphDelta;
  LayoutDelta layoutDelta;

  bool applied() const { return entry.applied(); }
};

nlohmann::json opAppliedBody(const SubmitOutcome& o);
nlohmann::json opRejectedBody(const SubmitOutcome& o);

/// Client-side awareness publication; absent fields are left alone. The outer
/// optional on currentDocument/selectedNode means "changed", the inner one
/// "set or cleared".
struct AwarenessUpdate {
  std::optional<CursorHint> cursor;
  std::optional<HeadPose> headPose;
  std::optional<std::optional<DocumentId>> currentDocument;
  std::optional<std::optional<NodeId>> selectedNode;
  std::int64_t timestamp = 0;
};

nlohmann::json awarenessUpdateToJson(const AwarenessUpdate& u);
AwarenessUpdate awarenessUpdateFromJson(const nlohmann::json& j);

/// One coalesced fan-out: sessions that changed since the previous one and
/// users that left. Each receiver gets every entry except its own.
struct AwarenessBatch {
  std::vector<UserSession> changed;
  std::vector<UserId> left;
  std::int64_t timestamp = 0;
};

/// Awareness message body for `receiver`, or nothing if no entry concerns it.
std::optional<nlohmann::json> awarenessBodyFor(const AwarenessBatch& batch,
                                               const UserId& receiver);

struct JoinResult {
  UserSession session;
  std::optional<std::string> warning;
};

inline constexpr std::int64_t kAwarenessIntervalMs = 50;

/// One room's serialization domain. Not thread-safe; callers serialize.
/// Times are milliseconds since room start.
class Room {
 public:
  explicit Room(RoomConfig config);
  /// Continues from a replayed log.
  Room(RoomConfig config, GraphState state, std::vector<LoggedOp> history);

  /// Every sequenced op is appended here (and flushed) before it is visible.
  void attachLog(std::unique_ptr<OpLogWriter> log) { log_ = std::move(log); }

  const RoomConfig& config() const { return config_; }
  const std::string& id() const { return config_.roomId; }
  const GraphState& graph() const { return graph_; }
  const LayoutResult& layout() const { return layout_; }
  const std::vector<PanelPose>& panelPoses() const { return panels_; }
  const std::map<UserId, UserSession>& sessions() const { return sessions_; }
  const std::vector<LoggedOp>& history() const { return history_; }
  std::uint64_t nextSeq() const { return history_.size() + 1; }

  /// Throws SyncError(RoomFull) when all palette colors are taken. A name
  /// already present gets a numeric suffix and a warning.
  JoinResult join(const std::string& name, Platform platform, std::int64_t now);
  void leave(const UserId& user, std::int64_t now);
  bool isJoined(const UserId& user) const { return sessions_.contains(user); }

  /// Sequences, logs and applies. Structural ops trigger a warm relayout;
  /// MoveNode writes the new position straight into the layout.
  SubmitOutcome submit(const UserId& actor, OpPayload payload, std::int64_t now);

  /// Stores the newest value per field. currentDocument and selectedNode
  /// changes are sequenced as ops; their outcomes are returned.
  std::vector<SubmitOutcome> publishAwareness(const UserId& user,
                                              const AwarenessUpdate& update,
                                              std::int64_t now);

  /// Coalesced fan-out, at most once per kAwarenessIntervalMs.
  std::optional<AwarenessBatch> flushAwareness(std::int64_t now);

  /// StateSnapshot body: graph, layout, documents, panel poses, sessions.
  nlohmann::json snapshotJson() const;

 private:
  void afterApplied(const UserId& actor, const OpPayload& payload);

  RoomConfig config_;
  std::vector<PanelPose> panels_;
  GraphState graph_;
  LayoutResult layout_;
  std::map<UserId, UserSession> sessions_;
  std::vector<LoggedOp> history_;
  std::unique_ptr<OpLogWriter> log_;

  std::set<UserId> dirty_;
  std::vector<UserId> left_;
  std::optional<std::int64_t> lastFlush_;
};

}  // namespace visrooms
