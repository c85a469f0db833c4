#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace kres {

struct NetError : std::runtime_error {
  explicit NetError(const std::string& what, bool timed_out = false)
      : std::runtime_error(what), timed_out(timed_out) {}
  bool timed_out;
};

struct DnsExchange {
  std::vector<std::uint8_t> response;
  double rtt_ms = 0.0;
};

// Plain-DNS client used by the bench harness and tests. Throws NetError on
// socket failure or timeout.
DnsExchange udp_query(const std::string& host, std::uint16_t port,
                      std::span<const std::uint8_t> query, int timeout_ms);

// RFC 1035 4.2.2 two-byte length framing.
DnsExchange tcp_query(const std::string& host, std::uint16_t port,
                      std::span<const std::uint8_t> query, int timeout_ms);

// One-shot line exchange with the proxy control channel ("TAG ...",
// "FLUSH_CACHE"); returns the reply line without the newline.
std::string control_command(const std::string& host, std::uint16_t port,
                            const std::string& line, int timeout_ms = 2000);

}  // namespace kres
