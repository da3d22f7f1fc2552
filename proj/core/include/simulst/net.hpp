#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace simulst::net {

struct Endpoint {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;

  std::string str() const { return host + ":" + std::to_string(port); }
};

/// "host:port" or ":port"; throws ConfigError.
Endpoint parse_endpoint(const std::string& text);

/// Line-oriented TCP stream. Move-only; closes on destruction.
class Stream {
 public:
  Stream() = default;
  explicit Stream(int fd) : fd_(fd) {}
  Stream(Stream&& o) noexcept;
  Stream& operator=(Stream&& o) noexcept;
  Stream(const Stream&) = delete;
  Stream& operator=(const Stream&) = delete;
  ~Stream();

  bool is_open() const noexcept { return fd_ >= 0; }
  /// Appends '\n'. Throws TransportError when the peer is gone.
  void send_line(const std::string& line);
  /// Next line without its '\n'; nullopt on orderly EOF. Throws
  /// TransportError on timeout (timeout_ms < 0 waits forever) or error.
  std::optional<std::string> recv_line(int timeout_ms = -1);
  void close();

 private:
  int fd_ = -1;
  std::string buffer_;
};

class Listener {
 public:
  /// Binds and listens; port 0 picks an ephemeral port.
  explicit Listener(const Endpoint& ep);
  Listener(const Listener&) = delete;
  Listener& operator=(const Listener&) = delete;
  ~Listener();

  std::uint16_t port() const noexcept { return port_; }
  /// nullopt on timeout or after close().
  std::optional<Stream> accept(int timeout_ms);
  void close();

 private:
  int fd_ = -1;
  std::uint16_t port_ = 0;
};

Stream connect(const Endpoint& ep, int timeout_ms = 5000);

}  // namespace simulst::net
