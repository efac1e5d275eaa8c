#include "visrooms/sync/hub.hpp"

#include <algorithm>
#include <fstream>

namespace visrooms {

using nlohmann::json;

Hub::Hub(HubOptions options, MessageSink& sink) : options_(std::move(options)), sink_(sink) {
  if (options_.logDir) std::filesystem::create_directories(*options_.logDir);
}

Hub::~Hub() { writeSnapshots(); }

std::unique_ptr<Hub::Slot> Hub::openSlot(const RoomConfig& config) {
  auto slot = std::make_unique<Slot>();
  if (!options_.logDir) {
    slot->room = std::make_unique<Room>(config);
    return slot;
  }
  const auto path = oplogPath(*options_.logDir, config.roomId);
  if (std::filesystem::exists(path)) {
    // The log's own header wins over the config we were given.
    ReplayedLog replay = replayLog(path);
    const std::size_t valid = 1 + replay.entries.size();
    slot->room = std::make_unique<Room>(std::move(replay.config), std::move(replay.state),
                                        std::move(replay.entries));
    slot->room->attachLog(
        std::make_unique<OpLogWriter>(OpLogWriter::resume(path, valid)));
  } else {
    slot->room = std::make_unique<Room>(config);
    slot->room->attachLog(std::make_unique<OpLogWriter>(OpLogWriter::create(path, config)));
  }
  return slot;
}

void Hub::addRoom(const RoomConfig& config) {
  auto slot = openSlot(config);
  std::lock_guard lock(roomsMutex_);
  rooms_[config.roomId] = std::move(slot);
}

Hub::Slot* Hub::find(const std::string& roomId) {
  std::lock_guard lock(roomsMutex_);
  auto it = rooms_.find(roomId);
  return it == rooms_.end() ? nullptr : it->second.get();
}

Hub::Slot* Hub::findOrCreate(const std::string& roomId) {
  std::lock_guard lock(roomsMutex_);
  if (auto it = rooms_.find(roomId); it != rooms_.end()) return it->second.get();
  if (!options_.defaultConfig || roomId.empty()) return nullptr;
  RoomConfig config = *options_.defaultConfig;
  config.roomId = roomId;
  auto& slot = rooms_[roomId];
  slot = openSlot(config);
  return slot.get();
}

std::vector<std::string> Hub::roomIds() const {
  std::lock_guard lock(roomsMutex_);
  std::vector<std::string> ids;
  for (const auto& [id, slot] : rooms_) ids.push_back(id);
  return ids;
}

void Hub::handleLine(ConnectionId from, std::string_view line, std::int64_t now) {
  WireMessage m;
  try {
    m = decodeMessage(line);
  } catch (const SyncError& e) {
    sink_.send(from, errorMessage("", e.code(), e.what()));
    return;
  }
  handle(from, m, now);
}

void Hub::onJoin(ConnectionId from, const WireMessage& m, std::int64_t now) {
  {
    std::lock_guard lock(connsMutex_);
    if (connRoom_.contains(from)) {
      throw SyncError(SyncErrorCode::BadMessage, "connection already joined a room");
    }
  }
  const auto name = m.body.find("name");
  if (name == m.body.end() || !name->is_string()) {
    throw SyncError(SyncErrorCode::BadMessage, "Join needs a string name");
  }
  Platform platform = Platform::Flat2d;
  try {
    platform = parsePlatform(m.body.value("platform", std::string("flat2d")));
  } catch (const std::exception& e) {
    throw SyncError(SyncErrorCode::BadMessage, e.what());
  }
  Slot* slot = findOrCreate(m.room);
  if (slot == nullptr) throw SyncError(SyncErrorCode::UnknownRoom, "no room " + m.room);

  std::lock_guard lock(slot->mutex);
  JoinResult joined = slot->room->join(name->get<std::string>(), platform, now);
  slot->members.push_back({from, joined.session.id});
  {
    std::lock_guard conns(connsMutex_);
    connRoom_[from] = m.room;
  }
  const auto& c = joined.session.color;
  sink_.send(from, {MessageType::JoinAck, m.room,
                    {{"userId", joined.session.id},
                     {"color", {c.r, c.g, c.b}},
                     {"warning", joined.warning ? json(*joined.warning) : json(nullptr)},
                     {"snapshot", slot->room->snapshotJson()}}});
}

void Hub::broadcastOutcome(Slot& slot, const SubmitOutcome& outcome, ConnectionId actorConn,
                           const json& clientRef) {
  if (!outcome.applied()) {
    json body = opRejectedBody(outcome);
    if (!clientRef.is_null()) body["clientRef"] = clientRef;
    sink_.send(actorConn, {MessageType::OpRejected, slot.room->id(), body});
    return;
  }
  const json body = opAppliedBody(outcome);
  for (const Member& member : slot.members) {
    if (member.conn == actorConn && !clientRef.is_null()) {
      json own = body;
      own["clientRef"] = clientRef;
      sink_.send(member.conn, {MessageType::OpApplied, slot.room->id(), own});
    } else {
      sink_.send(member.conn, {MessageType::OpApplied, slot.room->id(), body});
    }
  }
}

void Hub::handle(ConnectionId from, const WireMessage& m, std::int64_t now) {
  try {
    if (m.type == MessageType::Join) {
      onJoin(from, m, now);
      return;
    }
    Slot* slot = find(m.room);
    if (slot == nullptr) throw SyncError(SyncErrorCode::UnknownRoom, "no room " + m.room);
    std::lock_guard lock(slot->mutex);
    const auto member = std::find_if(slot->members.begin(), slot->members.end(),
                                     [&](const Member& x) { return x.conn == from; });
    if (member == slot->members.end()) {
      throw SyncError(SyncErrorCode::NotJoined, "join room " + m.room + " first");
    }
    const UserId user = member->user;

    switch (m.type) {
      case MessageType::OpSubmit: {
        OpPayload payload;
        try {
          const auto kind = parseOpKind(m.body.at("kind").get<std::string>());
          if (!kind) throw OperationFormatError("unknown kind " + m.body.at("kind").dump());
          payload = payloadFromJson(*kind, m.body.value("payload", json::object()));
        } catch (const std::exception& e) {
          throw SyncError(SyncErrorCode::BadMessage, e.what());
        }
        const SubmitOutcome outcome = slot->room->submit(user, std::move(payload), now);
        broadcastOutcome(*slot, outcome, from, m.body.value("clientRef", json(nullptr)));
        break;
      }
      case MessageType::Awareness: {
        AwarenessUpdate update;
        try {
          update = awarenessUpdateFromJson(m.body);
        } catch (const std::exception& e) {
          throw SyncError(SyncErrorCode::BadMessage, e.what());
        }
        for (const SubmitOutcome& o : slot->room->publishAwareness(user, update, now)) {
          broadcastOutcome(*slot, o, from, nullptr);
        }
        break;
      }
      case MessageType::StateSnapshot:
        sink_.send(from, {MessageType::StateSnapshot, m.room, slot->room->snapshotJson()});
        break;
      case MessageType::Leave:
        leaveRoom(*slot, from, now);
        break;
      default:
        throw SyncError(SyncErrorCode::BadMessage,
                        std::string(messageTypeName(m.type)) + " is server-to-client only");
    }
  } catch (const SyncError& e) {
    sink_.send(from, errorMessage(m.room, e.code(), e.what()));
  }
}

void Hub::leaveRoom(Slot& slot, ConnectionId conn, std::int64_t now) {
  const auto it = std::find_if(slot.members.begin(), slot.members.end(),
                               [&](const Member& x) { return x.conn == conn; });
  if (it == slot.members.end()) return;
  slot.room->leave(it->user, now);
  slot.members.erase(it);
  {
    std::lock_guard conns(connsMutex_);
    connRoom_.erase(conn);
  }
  if (slot.members.empty()) writeSnapshot(*slot.room);
}

void Hub::disconnect(ConnectionId conn, std::int64_t now) {
  std::string roomId;
  {
    std::lock_guard conns(connsMutex_);
    auto it = connRoom_.find(conn);
    if (it == connRoom_.end()) return;
    roomId = it->second;
  }
  if (Slot* slot = find(roomId)) {
    std::lock_guard lock(slot->mutex);
    leaveRoom(*slot, conn, now);
  }
}

void Hub::tick(std::int64_t now) {
  std::vector<Slot*> slots;
  {
    std::lock_guard lock(roomsMutex_);
    for (auto& [id, slot] : rooms_) slots.push_back(slot.get());
  }
  for (Slot* slot : slots) {
    std::lock_guard lock(slot->mutex);
    const auto batch = slot->room->flushAwareness(now);
    if (!batch) continue;
    for (const Member& member : slot->members) {
      if (auto body = awarenessBodyFor(*batch, member.user)) {
        sink_.send(member.conn, {MessageType::Awareness, slot->room->id(), std::move(*body)});
      }
    }
  }
}

void Hub::writeSnapshot(const Room& room) {
  if (!options_.logDir) return;
  const auto path = snapshotPath(*options_.logDir, room.id());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << room.snapshotJson().dump() << '\n';
}

void Hub::writeSnapshots() {
  std::lock_guard lock(roomsMutex_);
  for (auto& [id, slot] : rooms_) {
    std::lock_guard roomLock(slot->mutex);
    writeSnapshot(*slot->room);
  }
}

}  // namespace visrooms
