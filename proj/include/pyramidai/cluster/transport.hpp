#pragma once

#include <chrono>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace pyramidai::cluster {

struct PeerAddress {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;

  friend bool operator==(const PeerAddress&, const PeerAddress&) = default;
};

std::string to_string(const PeerAddress& a);
/// Parses "host:port"; throws ConfigError.
PeerAddress parse_address(std::string_view s);
/// Parses a comma-separated address list.
std::vector<PeerAddress> parse_address_list(std::string_view s);

/// Owning file descriptor.
class Socket {
 public:
  Socket() = default;
  explicit Socket(int fd) noexcept : fd_(fd) {}
  Socket(Socket&& o) noexcept : fd_(o.release()) {}
  Socket& operator=(Socket&& o) noexcept;
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;
  ~Socket() { close(); }

  int fd() const noexcept { return fd_; }
  bool valid() const noexcept { return fd_ >= 0; }
  int release() noexcept;
  void close() noexcept;

 private:
  int fd_ = -1;
};

/// Bound, listening TCP socket. Port 0 picks an ephemeral port.
class Listener {
 public:
  /// Throws TransportError.
  explicit Listener(const PeerAddress& bind_address);
  std::uint16_t port() const noexcept { return port_; }
  int fd() const noexcept { return socket_.fd(); }
  /// Nonblocking accept; returns an invalid socket when none is pending.
  Socket accept();

 private:
  Socket socket_;
  std::uint16_t port_ = 0;
};

/// Connects with retries until `timeout`; throws TransportError.
Socket connect_to(const PeerAddress& address, std::chrono::milliseconds timeout);

/// Writes all bytes (blocking); throws TransportError naming `peer`.
void send_all(const Socket& s, std::string_view bytes, const std::string& peer);

void set_nonblocking(const Socket& s);

}  // namespace pyramidai::cluster
