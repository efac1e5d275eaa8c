#include "visrooms/sync/tcp_server.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <stdexcept>

#include "visrooms/sync/websocket.hpp"

namespace visrooms {

ListenAddress parseListenAddress(const std::string& text) {
  ListenAddress a;
  std::string port = text;
  if (const auto colon = text.rfind(':'); colon != std::string::npos) {
    if (colon > 0) a.host = text.substr(0, colon);
    port = text.substr(colon + 1);
  }
  try {
    std::size_t used = 0;
    const int p = std::stoi(port, &used);
    if (used != port.size() || p < 0 || p > 65535) throw std::out_of_range(port);
    a.port = static_cast<std::uint16_t>(p);
  } catch (const std::exception&) {
    throw std::invalid_argument("bad listen address '" + text + "'");
  }
  return a;
}

struct TcpServer::Connection {
  ConnectionId id = 0;
  int fd = -1;
  bool websocket = false;
  std::mutex writeMutex;

  void write(const std::string& bytes) {
    std::lock_guard lock(writeMutex);
    std::size_t off = 0;
    while (off < bytes.size()) {
      const ssize_t n = ::send(fd, bytes.data() + off, bytes.size() - off, MSG_NOSIGNAL);
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) return;  // peer gone; the reader notices and cleans up
      off += static_cast<std::size_t>(n);
    }
  }
};

TcpServer::TcpServer(HubOptions options) : hub_(std::move(options), *this) {}

TcpServer::~TcpServer() { stop(); }

std::int64_t TcpServer::now() const {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::steady_clock::now() - started_)
      .count();
}

void TcpServer::start(const ListenAddress& address) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  hints.ai_flags = AI_PASSIVE;
  addrinfo* res = nullptr;
  const std::string port = std::to_string(address.port);
  if (const int rc = getaddrinfo(address.host.c_str(), port.c_str(), &hints, &res); rc != 0) {
    throw std::runtime_error("cannot resolve " + address.host + ": " + gai_strerror(rc));
  }
  for (addrinfo* ai = res; ai != nullptr; ai = ai->ai_next) {
    const int fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
    if (fd < 0) continue;
    const int one = 1;
    setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    if (::bind(fd, ai->ai_addr, ai->ai_addrlen) == 0 && ::listen(fd, 64) == 0) {
      listenFd_ = fd;
      break;
    }
    ::close(fd);
  }
  freeaddrinfo(res);
  if (listenFd_ < 0) {
    throw std::runtime_error("cannot listen on " + address.host + ":" + port + ": " +
                             std::strerror(errno));
  }
  sockaddr_storage bound{};
  socklen_t len = sizeof bound;
  getsockname(listenFd_, reinterpret_cast<sockaddr*>(&bound), &len);
  port_ = ntohs(bound.ss_family == AF_INET6
                    ? reinterpret_cast<sockaddr_in6*>(&bound)->sin6_port
                    : reinterpret_cast<sockaddr_in*>(&bound)->sin_port);

  started_ = std::chrono::steady_clock::now();
  running_ = true;
  acceptThread_ = std::thread([this] { acceptLoop(); });
  tickThread_ = std::thread([this] { tickLoop(); });
}

void TcpServer::stop() {
  if (!running_.exchange(false)) return;
  ::shutdown(listenFd_, SHUT_RDWR);
  ::close(listenFd_);
  if (acceptThread_.joinable()) acceptThread_.join();
  if (tickThread_.joinable()) tickThread_.join();
  {
    std::lock_guard lock(connsMutex_);
    for (auto& [id, conn] : conns_) ::shutdown(conn->fd, SHUT_RDWR);
  }
  std::vector<std::thread> workers;
  {
    std::lock_guard lock(connsMutex_);
    workers.swap(workers_);
  }
  for (auto& t : workers) t.join();
}

void TcpServer::acceptLoop() {
  while (running_) {
    const int fd = ::accept(listenFd_, nullptr, nullptr);
    if (fd < 0) {
      if (errno == EINTR) continue;
      break;
    }
    const int one = 1;
    setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
    auto conn = std::make_shared<Connection>();
    conn->fd = fd;
    std::lock_guard lock(connsMutex_);
    conn->id = nextId_++;
    conns_[conn->id] = conn;
    workers_.emplace_back([this, conn] { serve(conn); });
  }
}

void TcpServer::tickLoop() {
  while (running_) {
    hub_.tick(now());
    std::this_thread::sleep_for(std::chrono::milliseconds(10));
  }
}

void TcpServer::send(ConnectionId to, const WireMessage& message) {
  std::shared_ptr<Connection> conn;
  {
    std::lock_guard lock(connsMutex_);
    auto it = conns_.find(to);
    if (it == conns_.end()) return;
    conn = it->second;
  }
  std::string line = encodeMessage(message) + '\n';
  if (conn->websocket) line = ws::encodeFrame({true, ws::Opcode::Text, std::move(line)});
  conn->write(line);
}

void TcpServer::serve(std::shared_ptr<Connection> conn) {
  std::string pending;
  ws::FrameDecoder frames;
  bool decided = false;
  char buf[64 * 1024];

  auto deliverLines = [&](std::string& text) {
    std::size_t start = 0;
    for (std::size_t nl = text.find('\n'); nl != std::string::npos;
         nl = text.find('\n', start)) {
      std::string_view line(text.data() + start, nl - start);
      if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
      if (!line.empty()) hub_.handleLine(conn->id, line, now());
      start = nl + 1;
    }
    text.erase(0, start);
  };

  bool open = true;
  while (open && running_) {
    const ssize_t n = ::recv(conn->fd, buf, sizeof buf, 0);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) break;
    std::string_view chunk(buf, static_cast<std::size_t>(n));

    if (!decided) {
      pending.append(chunk);
      if (pending.size() < 4 && pending.find('\n') == std::string::npos) continue;
      if (pending.starts_with("GET ")) {
        const auto end = pending.find("\r\n\r\n");
        if (end == std::string::npos) continue;
        const auto key = ws::upgradeKey(std::string_view(pending).substr(0, end + 2));
        if (!key) {
          conn->write("HTTP/1.1 400 Bad Request\r\nContent-Length: 0\r\n\r\n");
          break;
        }
        conn->write(ws::handshakeResponse(*key));
        conn->websocket = true;
        frames.feed(std::string_view(pending).substr(end + 4));
        pending.clear();
      }
      decided = true;
      chunk = {};
    }

    if (!conn->websocket) {
      pending.append(chunk);
      deliverLines(pending);
      continue;
    }
    frames.feed(chunk);
    try {
      while (auto f = frames.next()) {
        switch (f->opcode) {
          case ws::Opcode::Text:
          case ws::Opcode::Binary:
          case ws::Opcode::Continuation:
            pending += f->payload;
            if (f->fin) {
              if (!pending.ends_with('\n')) pending.push_back('\n');
              deliverLines(pending);
            }
            break;
          case ws::Opcode::Ping:
            conn->write(ws::encodeFrame({true, ws::Opcode::Pong, f->payload}));
            break;
          case ws::Opcode::Close:
            conn->write(ws::encodeFrame({true, ws::Opcode::Close, {}}));
            open = false;
            break;
          default:
            break;
        }
        if (!open) break;
      }
    } catch (const std::exception&) {
      break;
    }
  }

  hub_.disconnect(conn->id, now());
  {
    std::lock_guard lock(connsMutex_);
    conns_.erase(conn->id);
  }
  ::close(conn->fd);
}

}  // namespace visrooms
