#include "visrooms/sync/websocket.hpp"

#include <openssl/evp.h>
#include <openssl/sha.h>

#include <algorithm>
#include <cctype>
#include <stdexcept>

namespace visrooms::ws {

namespace {

constexpr std::string_view kGuid = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11";

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

}  // namespace

std::string acceptKey(std::string_view clientKey) {
  const std::string input = std::string(clientKey) + std::string(kGuid);
  unsigned char digest[SHA_DIGEST_LENGTH];
  SHA1(reinterpret_cast<const unsigned char*>(input.data()), input.size(), digest);
  std::string out(4 * ((SHA_DIGEST_LENGTH + 2) / 3), '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), digest,
                                SHA_DIGEST_LENGTH);
  out.resize(static_cast<std::size_t>(n));
  return out;
}

std::optional<std::string> upgradeKey(std::string_view head) {
  if (!head.starts_with("GET ")) return std::nullopt;
  std::optional<std::string> key;
  bool upgrade = false;
  std::string_view rest = head;
  while (!rest.empty()) {
    const std::size_t end = std::min(rest.find('\n'), rest.size());
    const std::string_view line = rest.substr(0, end);
    rest.remove_prefix(std::min(end + 1, rest.size()));
    const std::size_t colon = line.find(':');
    if (colon != std::string_view::npos) {
      const std::string name = lower(trim(line.substr(0, colon)));
      const std::string_view value = trim(line.substr(colon + 1));
      if (name == "sec-websocket-key") key = std::string(value);
      if (name == "upgrade" && lower(value) == "websocket") upgrade = true;
    }
  }
  if (!upgrade) return std::nullopt;
  return key;
}

std::string handshakeResponse(std::string_view clientKey) {
  return "HTTP/1.1 101 Switching Protocols\r\n"
         "Upgrade: websocket\r\n"
         "Connection: Upgrade\r\n"
         "Sec-WebSocket-Accept: " +
         acceptKey(clientKey) + "\r\n\r\n";
}

std::string encodeFrame(const Frame& frame, std::optional<std::uint32_t> mask) {
  std::string out;
  out.push_back(static_cast<char>((frame.fin ? 0x80 : 0) | static_cast<int>(frame.opcode)));
  const std::uint64_t n = frame.payload.size();
  const char maskBit = mask ? static_cast<char>(0x80) : 0;
  if (n < 126) {
    out.push_back(static_cast<char>(maskBit | static_cast<char>(n)));
  } else if (n <= 0xFFFF) {
    out.push_back(static_cast<char>(maskBit | 126));
    out.push_back(static_cast<char>(n >> 8));
    out.push_back(static_cast<char>(n));
  } else {
    out.push_back(static_cast<char>(maskBit | 127));
    for (int shift = 56; shift >= 0; shift -= 8) out.push_back(static_cast<char>(n >> shift));
  }
  if (!mask) return out + frame.payload;
  const unsigned char key[4] = {static_cast<unsigned char>(*mask >> 24),
                                static_cast<unsigned char>(*mask >> 16),
                                static_cast<unsigned char>(*mask >> 8),
                                static_cast<unsigned char>(*mask)};
  out.append(reinterpret_cast<const char*>(key), 4);
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back(static_cast<char>(frame.payload[i] ^ key[i % 4]));
  }
  return out;
}

std::optional<Frame> FrameDecoder::next() {
  const auto* b = reinterpret_cast<const unsigned char*>(buffer_.data());
  const std::size_t have = buffer_.size();
  if (have < 2) return std::nullopt;
  std::size_t header = 2;
  std::uint64_t n = b[1] & 0x7F;
  if (n == 126) {
    header += 2;
    if (have < header) return std::nullopt;
    n = (std::uint64_t{b[2]} << 8) | b[3];
  } else if (n == 127) {
    header += 8;
    if (have < header) return std::nullopt;
    n = 0;
    for (int i = 0; i < 8; ++i) n = (n << 8) | b[2 + i];
  }
  if (n > maxPayload) throw std::runtime_error("websocket frame too large");
  const bool masked = (b[1] & 0x80) != 0;
  const std::size_t keyAt = header;
  if (masked) header += 4;
  if (have < header + n) return std::nullopt;

  Frame f;
  f.fin = (b[0] & 0x80) != 0;
  f.opcode = static_cast<Opcode>(b[0] & 0x0F);
  f.payload = buffer_.substr(header, n);
  if (masked) {
    for (std::size_t i = 0; i < n; ++i) f.payload[i] ^= static_cast<char>(b[keyAt + i % 4]);
  }
  buffer_.erase(0, header + n);
  return f;
}

}  // namespace visrooms::ws
