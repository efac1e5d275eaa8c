#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace visrooms::ws {

enum class Opcode : std::uint8_t {
  Continuation = 0x0,
  Text = 0x1,
  Binary = 0x2,
  Close = 0x8,
  Ping = 0x9,
  Pong = 0xA,
};

/// Sec-WebSocket-Accept value for a client's Sec-WebSocket-Key.
std::string acceptKey(std::string_view clientKey);

/// Sec-WebSocket-Key of an HTTP upgrade request head, if it is one.
std::optional<std::string> upgradeKey(std::string_view requestHead);

/// 101 Switching Protocols response for `clientKey`.
std::string handshakeResponse(std::string_view clientKey);

struct Frame {
  bool fin = true;
  Opcode opcode = Opcode::Text;
  std::string payload;
};

/// Server frames are unmasked; client frames carry `mask`.
std::string encodeFrame(const Frame& frame, std::optional<std::uint32_t> mask = std::nullopt);

/// Incremental decoder: feed bytes, take complete frames (unmasked).
class FrameDecoder {
 public:
  void feed(std::string_view bytes) { buffer_.append(bytes); }
  /// Next complete frame, or nothing until more bytes arrive. Throws
  /// std::runtime_error on a frame larger than `maxPayload`.
  std::optional<Frame> next();

  static constexpr std::uint64_t maxPayload = 16u << 20;

 private:
  std::string buffer_;
};

}  // namespace visrooms::ws
