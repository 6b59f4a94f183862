#include "pyramidai/cluster/transport.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <charconv>
#include <cstring>
#include <thread>

#include "pyramidai/errors.hpp"

namespace pyramidai::cluster {

namespace {

std::string errno_text() { return std::strerror(errno); }

sockaddr_in resolve(const PeerAddress& a) {
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(a.port);
  if (a.host.empty() || a.host == "0.0.0.0" || a.host == "*") {
    addr.sin_addr.s_addr = htonl(INADDR_ANY);
    return addr;
  }
  if (inet_pton(AF_INET, a.host.c_str(), &addr.sin_addr) == 1) return addr;
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  if (getaddrinfo(a.host.c_str(), nullptr, &hints, &res) != 0 || res == nullptr) {
    throw TransportError("cannot resolve host '" + a.host + "'");
  }
  addr.sin_addr = reinterpret_cast<sockaddr_in*>(res->ai_addr)->sin_addr;
  freeaddrinfo(res);
  return addr;
}

}  // namespace

std::string to_string(const PeerAddress& a) { return a.host + ":" + std::to_string(a.port); }

PeerAddress parse_address(std::string_view s) {
  const auto colon = s.rfind(':');
  if (colon == std::string_view::npos || colon + 1 == s.size()) {
    throw ConfigError("address '" + std::string(s) + "' must be host:port");
  }
  unsigned port = 0;
  const auto digits = s.substr(colon + 1);
  auto [p, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), port);
  if (ec != std::errc{} || p != digits.data() + digits.size() || port > 65535) {
    throw ConfigError("bad port in address '" + std::string(s) + "'");
  }
  return {std::string(s.substr(0, colon)), static_cast<std::uint16_t>(port)};
}

std::vector<PeerAddress> parse_address_list(std::string_view s) {
  std::vector<PeerAddress> out;
  while (!s.empty()) {
    const auto comma = s.find(',');
    const auto item = s.substr(0, comma);
    if (!item.empty()) out.push_back(parse_address(item));
    if (comma == std::string_view::npos) break;
    s.remove_prefix(comma + 1);
  }
  return out;
}

Socket& Socket::operator=(Socket&& o) noexcept {
  if (this != &o) {
    close();
    fd_ = o.release();
  }
  return *this;
}

int Socket::release() noexcept {
  const int fd = fd_;
  fd_ = -1;
  return fd;
}

void Socket::close() noexcept {
  if (fd_ >= 0) ::close(fd_);
  fd_ = -1;
}

void set_nonblocking(const Socket& s) {
  const int flags = fcntl(s.fd(), F_GETFL, 0);
  if (flags < 0 || fcntl(s.fd(), F_SETFL, flags | O_NONBLOCK) < 0) {
    throw TransportError("fcntl failed: " + errno_text());
  }
}

Listener::Listener(const PeerAddress& bind_address) {
  socket_ = Socket(::socket(AF_INET, SOCK_STREAM, 0));
  if (!socket_.valid()) throw TransportError("socket failed: " + errno_text());
  const int one = 1;
  setsockopt(socket_.fd(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in addr = resolve(bind_address);
  if (::bind(socket_.fd(), reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0) {
    throw TransportError("cannot bind " + to_string(bind_address) + ": " + errno_text());
  }
  if (::listen(socket_.fd(), 64) < 0) throw TransportError("listen failed: " + errno_text());
  socklen_t len = sizeof addr;
  getsockname(socket_.fd(), reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
  set_nonblocking(socket_);
}

Socket Listener::accept() {
  const int fd = ::accept(socket_.fd(), nullptr, nullptr);
  if (fd < 0) {
    if (errno == EAGAIN || errno == EWOULDBLOCK || errno == EINTR) return Socket();
    throw TransportError("accept failed: " + errno_text());
  }
  Socket s(fd);
  const int one = 1;
  setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
  set_nonblocking(s);
  return s;
}

Socket connect_to(const PeerAddress& address, std::chrono::milliseconds timeout) {
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  const sockaddr_in addr = resolve(address);
  auto delay = std::chrono::milliseconds(5);
  for (;;) {
    Socket s(::socket(AF_INET, SOCK_STREAM, 0));
    if (!s.valid()) throw TransportError("socket failed: " + errno_text());
    if (::connect(s.fd(), reinterpret_cast<const sockaddr*>(&addr), sizeof addr) == 0) {
      const int one = 1;
      setsockopt(s.fd(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
      return s;
    }
    if (std::chrono::steady_clock::now() + delay > deadline) {
      throw TransportError("cannot connect to peer " + to_string(address) + ": " + errno_text());
    }
    std::this_thread::sleep_for(delay);
    delay = std::min(delay * 2, std::chrono::milliseconds(200));
  }
}

void send_all(const Socket& s, std::string_view bytes, const std::string& peer) {
  while (!bytes.empty()) {
    const ssize_t n = ::send(s.fd(), bytes.data(), bytes.size(), MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw TransportError("lost connection to peer " + peer + ": " + errno_text());
    }
    bytes.remove_prefix(static_cast<std::size_t>(n));
  }
}

}  // namespace pyramidai::cluster
