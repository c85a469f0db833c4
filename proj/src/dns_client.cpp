#include "kres/dns_client.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>

namespace kres {

namespace {

struct FdGuard {
  int fd;
  ~FdGuard() {
    if (fd >= 0) ::close(fd);
  }
};

sockaddr_in make_addr(const std::string& host, std::uint16_t port) {
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
    throw NetError("invalid IPv4 address: " + host);
  }
  return addr;
}

void set_rcv_timeout(int fd, int timeout_ms) {
  timeval tv{};
  tv.tv_sec = timeout_ms / 1000;
  tv.tv_usec = timeout_ms % 1000 * 1000;
  ::setsockopt(fd, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof(tv));
  ::setsockopt(fd, SOL_SOCKET, SO_SNDTIMEO, &tv, sizeof(tv));
}

double elapsed_ms(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
      .count();
}

void recv_exact(int fd, std::uint8_t* buf, std::size_t len, const char* what) {
  std::size_t got = 0;
  while (got < len) {
    ssize_t n = ::recv(fd, buf + got, len - got, 0);
    if (n == 0) throw NetError(std::string(what) + ": connection closed");
    if (n < 0) {
      if (errno == EAGAIN || errno == EWOULDBLOCK) {
        throw NetError(std::string(what) + ": timeout", true);
      }
      throw NetError(std::string(what) + ": " + std::strerror(errno));
    }
    got += static_cast<std::size_t>(n);
  }
}

void send_all(int fd, const std::uint8_t* buf, std::size_t len, const char* what) {
  std::size_t sent = 0;
  while (sent < len) {
    ssize_t n = ::send(fd, buf + sent, len - sent, MSG_NOSIGNAL);
    if (n <= 0) throw NetError(std::string(what) + ": send failed: " + std::strerror(errno));
    sent += static_cast<std::size_t>(n);
  }
}

}  // namespace

DnsExchange udp_query(const std::string& host, std::uint16_t port,
                      std::span<const std::uint8_t> query, int timeout_ms) {
  int fd = ::socket(AF_INET, SOCK_DGRAM, 0);
  if (fd < 0) throw NetError("udp socket: " + std::string(std::strerror(errno)));
  FdGuard guard{fd};
  set_rcv_timeout(fd, timeout_ms);
  auto addr = make_addr(host, port);

  auto start = std::chrono::steady_clock::now();
  if (::sendto(fd, query.data(), query.size(), 0, reinterpret_cast<sockaddr*>(&addr),
               sizeof(addr)) < 0) {
    throw NetError("udp send: " + std::string(std::strerror(errno)));
  }
  std::uint8_t buf[65535];
  ssize_t n = ::recv(fd, buf, sizeof(buf), 0);
  if (n < 0) {
    if (errno == EAGAIN || errno == EWOULDBLOCK) throw NetError("udp recv: timeout", true);
    throw NetError("udp recv: " + std::string(std::strerror(errno)));
  }
  DnsExchange out;
  out.rtt_ms = elapsed_ms(start);
  out.response.assign(buf, buf + n);
  return out;
}

DnsExchange tcp_query(const std::string& host, std::uint16_t port,
                      std::span<const std::uint8_t> query, int timeout_ms) {
  if (query.size() > 0xffff) throw NetError("tcp query too large");
  int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) throw NetError("tcp socket: " + std::string(std::strerror(errno)));
  FdGuard guard{fd};
  set_rcv_timeout(fd, timeout_ms);
  auto addr = make_addr(host, port);

  auto start = std::chrono::steady_clock::now();
  if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) < 0) {
    throw NetError("tcp connect: " + std::string(std::strerror(errno)));
  }
  std::uint8_t prefix[2] = {static_cast<std::uint8_t>(query.size() >> 8),
                            static_cast<std::uint8_t>(query.size() & 0xff)};
  send_all(fd, prefix, 2, "tcp");
  send_all(fd, query.data(), query.size(), "tcp");

  std::uint8_t len_buf[2];
  recv_exact(fd, len_buf, 2, "tcp recv");
  std::size_t resp_len = static_cast<std::size_t>(len_buf[0]) << 8 | len_buf[1];
  DnsExchange out;
  out.response.resize(resp_len);
  recv_exact(fd, out.response.data(), resp_len, "tcp recv");
  out.rtt_ms = elapsed_ms(start);
  return out;
}

std::string control_command(const std::string& host, std::uint16_t port,
                            const std::string& line, int timeout_ms) {
  int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) throw NetError("control socket: " + std::string(std::strerror(errno)));
  FdGuard guard{fd};
  set_rcv_timeout(fd, timeout_ms);
  auto addr = make_addr(host, port);
  if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) < 0) {
    throw NetError("control connect: " + std::string(std::strerror(errno)));
  }
  std::string payload = line;
  if (payload.empty() || payload.back() != '\n') payload.push_back('\n');
  send_all(fd, reinterpret_cast<const std::uint8_t*>(payload.data()), payload.size(),
           "control");
  std::string reply;
  char c;
  while (true) {
    ssize_t n = ::recv(fd, &c, 1, 0);
    if (n <= 0) {
      if (n < 0 && (errno == EAGAIN || errno == EWOULDBLOCK)) {
        throw NetError("control recv: timeout", true);
      }
      break;
    }
    if (c == '\n') break;
    reply.push_back(c);
  }
  return reply;
}

}  // namespace kres
