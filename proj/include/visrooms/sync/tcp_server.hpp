#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "visrooms/sync/hub.hpp"

namespace visrooms {

struct ListenAddress {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;
};

/// "host:port", ":port" or "port". Throws std::invalid_argument.
ListenAddress parseListenAddress(const std::string& text);

/// Serves the NDJSON protocol over plain TCP. A connection whose first bytes
/// are an HTTP GET upgrade request is switched to WebSocket framing instead;
/// each text frame then carries one or more NDJSON lines.
class TcpServer : private MessageSink {
 public:
  explicit TcpServer(HubOptions options);
  ~TcpServer() override;

  /// Binds and starts accepting; port 0 picks a free port.
  void start(const ListenAddress& address);
  void stop();
  std::uint16_t port() const { return port_; }
  Hub& hub() { return hub_; }

 private:
  struct Connection;

  void send(ConnectionId to, const WireMessage& message) override;
  void acceptLoop();
  void serve(std::shared_ptr<Connection> conn);
  void tickLoop();
  std::int64_t now() const;

  Hub hub_;
  int listenFd_ = -1;
  std::uint16_t port_ = 0;
  std::atomic<bool> running_{false};
  std::chrono::steady_clock::time_point started_;
  std::thread acceptThread_;
  std::thread tickThread_;

  std::mutex connsMutex_;
  std::map<ConnectionId, std::shared_ptr<Connection>> conns_;
  std::vector<std::thread> workers_;
  ConnectionId nextId_ = 1;
};

}  // namespace visrooms
