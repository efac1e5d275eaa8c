#include "visrooms/sync/wire.hpp"

#include <array>

namespace visrooms {

using nlohmann::json;

namespace {

constexpr std::array<std::string_view, 9> kTypeNames = {
    "Join",          "JoinAck",   "OpSubmit", "OpApplied", "OpRejected",
    "StateSnapshot", "Awareness", "Leave",    "Error"};

}  // namespace

std::string_view messageTypeName(MessageType t) {
  return kTypeNames[static_cast<std::size_t>(t)];
}

std::optional<MessageType> parseMessageType(std::string_view name) {
  for (std::size_t i = 0; i < kTypeNames.size(); ++i) {
    if (kTypeNames[i] == name) return static_cast<MessageType>(i);
  }
  return std::nullopt;
}

std::string_view syncErrorName(SyncErrorCode c) {
  switch (c) {
    case SyncErrorCode::RoomFull: return "RoomFull";
    case SyncErrorCode::NotJoined: return "NotJoined";
    case SyncErrorCode::UnknownRoom: return "UnknownRoom";
    case SyncErrorCode::BadMessage: return "BadMessage";
    case SyncErrorCode::ProtocolMismatch: return "ProtocolMismatch";
  }
  return "?";
}

std::string encodeMessage(const WireMessage& m) {
  const json j = {{"type", messageTypeName(m.type)},
                  {"room", m.room},
                  {"protocolVersion", kProtocolVersion},
                  {"body", m.body}};
  return j.dump();
}

WireMessage decodeMessage(std::string_view line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw SyncError(SyncErrorCode::BadMessage, std::string("not JSON: ") + e.what());
  }
  if (!j.is_object()) throw SyncError(SyncErrorCode::BadMessage, "message must be an object");
  const auto version = j.find("protocolVersion");
  if (version == j.end() || !version->is_string() ||
      version->get<std::string>() != kProtocolVersion) {
    throw SyncError(SyncErrorCode::ProtocolMismatch,
                    "protocolVersion must be \"" + std::string(kProtocolVersion) + "\"");
  }
  const auto type = j.find("type");
  const auto room = j.find("room");
  if (type == j.end() || !type->is_string() || room == j.end() || !room->is_string()) {
    throw SyncError(SyncErrorCode::BadMessage, "type and room are required strings");
  }
  const auto parsed = parseMessageType(type->get<std::string>());
  if (!parsed) {
    throw SyncError(SyncErrorCode::BadMessage, "unknown message type " + type->dump());
  }
  WireMessage m;
  m.type = *parsed;
  m.room = room->get<std::string>();
  if (auto body = j.find("body"); body != j.end()) m.body = *body;
  if (!m.body.is_object()) throw SyncError(SyncErrorCode::BadMessage, "body must be an object");
  return m;
}

WireMessage errorMessage(const std::string& room, SyncErrorCode code,
                         const std::string& message) {
  return {MessageType::Error, room, {{"code", syncErrorName(code)}, {"message", message}}};
}

}  // namespace visrooms
