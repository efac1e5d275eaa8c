#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include <json.hpp>

namespace visrooms {

inline constexpr std::string_view kProtocolVersion = "1";

enum class MessageType {
  Join,
  JoinAck,
  OpSubmit,
  OpApplied,
  OpRejected,
  StateSnapshot,
  Awareness,
  Leave,
  Error,
};

std::string_view messageTypeName(MessageType t);
std::optional<MessageType> parseMessageType(std::string_view name);

enum class SyncErrorCode {
  RoomFull,
  NotJoined,
  UnknownRoom,
  BadMessage,
  ProtocolMismatch,
};

std::string_view syncErrorName(SyncErrorCode c);

class SyncError : public std::runtime_error {
 public:
  SyncError(SyncErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  SyncErrorCode code() const { return code_; }

 private:
  SyncErrorCode code_;
};

/// One NDJSON line: {type, room, protocolVersion, body}.
struct WireMessage {
  MessageType type = MessageType::Error;
  std::string room;
  nlohmann::json body = nlohmann::json::object();
};

/// Single-line JSON without the trailing newline.
std::string encodeMessage(const WireMessage& m);

/// Throws SyncError: BadMessage for malformed lines, ProtocolMismatch for a
/// missing or different protocolVersion.
WireMessage decodeMessage(std::string_view line);

WireMessage errorMessage(const std::string& room, SyncErrorCode code,
                         const std::string& message);

}  // namespace visrooms
