#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "visrooms/sync/room.hpp"
#include "visrooms/sync/wire.hpp"

namespace visrooms {

using ConnectionId = std::uint64_t;

/// Outbound side of the transport. Called with a room's lock held, so
/// implementations must not call back into the Hub.
class MessageSink {
 public:
  virtual ~MessageSink() = default;
  virtual void send(ConnectionId to, const WireMessage& message) = 0;
};

struct HubOptions {
  /// Template for rooms joined before they exist; its roomId is replaced by
  /// the requested one. Without it, unknown rooms are refused.
  std::optional<RoomConfig> defaultConfig;
  /// Where `<roomId>.oplog.ndjson` and `<roomId>.snapshot.json` live. A room
  /// whose log already exists continues from it.
  std::optional<std::filesystem::path> logDir;
};

/// Routes wire messages for any number of rooms. Each room is its own
/// serialization domain; different rooms proceed in parallel.
class Hub {
 public:
  Hub(HubOptions options, MessageSink& sink);
  ~Hub();

  /// Creates (or resumes from the log directory) a room for `config`.
  void addRoom(const RoomConfig& config);

  void handle(ConnectionId from, const WireMessage& message, std::int64_t now);
  /// Decodes one NDJSON line; malformed lines get an Error reply.
  void handleLine(ConnectionId from, std::string_view line, std::int64_t now);
  /// Connection closed: leaves its room if it had joined one.
  void disconnect(ConnectionId conn, std::int64_t now);
  /// Sends coalesced awareness for every room that is due.
  void tick(std::int64_t now);

  /// Writes `<roomId>.snapshot.json` for every room (no-op without logDir).
  void writeSnapshots();

  /// Runs `fn` with the room locked; false if no such room.
  template <class Fn>
  bool withRoom(const std::string& roomId, Fn&& fn) {
    Slot* slot = find(roomId);
    if (slot == nullptr) return false;
    std::lock_guard lock(slot->mutex);
    fn(static_cast<const Room&>(*slot->room));
    return true;
  }
  std::vector<std::string> roomIds() const;

 private:
  struct Member {
    ConnectionId conn;
    UserId user;
  };
  struct Slot {
    std::mutex mutex;
    std::unique_ptr<Room> room;
    std::vector<Member> members;
  };

  Slot* find(const std::string& roomId);
  Slot* findOrCreate(const std::string& roomId);
  std::unique_ptr<Slot> openSlot(const RoomConfig& config);
  void broadcastOutcome(Slot& slot, const SubmitOutcome& outcome, ConnectionId actorConn,
                        const nlohmann::json& clientRef);
  void writeSnapshot(const Room& room);
  void onJoin(ConnectionId from, const WireMessage& m, std::int64_t now);
  void leaveRoom(Slot& slot, ConnectionId conn, std::int64_t now);

  HubOptions options_;
  MessageSink& sink_;
  mutable std::mutex roomsMutex_;
  std::map<std::string, std::unique_ptr<Slot>> rooms_;
  // Which room each joined connection belongs to.
  std::mutex connsMutex_;
  std::map<ConnectionId, std::string> connRoom_;
};

}  // namespace visrooms
