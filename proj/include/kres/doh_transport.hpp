#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kres/config.hpp"
#include "kres/dns_wire.hpp"

namespace kres {

// Unpadded base64url (RFC 4648 §5), the dns= query-parameter encoding.
std::string base64url_encode(std::span<const std::uint8_t> data);

struct DohRequest {
  HttpMethod method = HttpMethod::Post;
  std::string url;  // full URL; GET carries the ?dns= parameter
  std::vector<std::pair<std::string, std::string>> headers;
  std::vector<std::uint8_t> body;  // POST only
};

// POST: body = query bytes verbatim. GET: ?dns=<base64url>, no padding; the
// query's id must already be zero (cache friendliness). Throws
// std::invalid_argument if the URL already carries a dns parameter or the
// GET precondition is violated.
DohRequest build_doh_request(std::span<const std::uint8_t> query_bytes,
                             const RecursorSpec& recursor);

enum class TransportError {
  None,
  Connect,
  Timeout,
  Tls,
  HttpStatus,    // non-200
  ContentType,   // 200 but not application/dns-message
  Decode,        // body failed wire decode
};

std::string to_string(TransportError e);

struct UpstreamResult {
  int recursor_index = -1;  // the recursor actually contacted
  double rtt_ms = 0.0;      // request send -> full response received
  std::optional<DnsMessage> message;  // present iff error == None
  int http_status = 0;
  TransportError error = TransportError::None;
  std::string error_detail;
  int attempts = 0;         // total attempts across retries
  bool failed_over = false; // relaxed mode reached index+1

  bool ok() const { return error == TransportError::None; }
};

struct HealthStatus {
  int recursor_index = -1;
  bool reachable = false;
  std::optional<double> last_probe_rtt_ms;
  int consecutive_failures = 0;
};

// HTTPS exchange per RFC 8484 with per-recursor connection reuse.
//
// Strict mode never contacts any recursor other than the assigned one (at
// most 2 retries against it); relaxed mode may fail over to index+1 mod K
// after the retries are exhausted, which the caller must surface in the
// query log.
class DohClient {
 public:
  DohClient(ResolverPool pool, std::int64_t timeout_ms, FailoverMode mode);
  ~DohClient();

  DohClient(const DohClient&) = delete;
  DohClient& operator=(const DohClient&) = delete;

  UpstreamResult exchange(std::span<const std::uint8_t> query_bytes, std::uint32_t index);

  // One fixed query against one recursor; failures are recorded in the
  // health table, not raised.
  HealthStatus probe_health(std::uint32_t index);

  HealthStatus health(std::uint32_t index) const;
  void set_probe_name(std::string qname) { probe_name_ = std::move(qname); }

  const ResolverPool& pool() const { return pool_; }

 private:
  struct Connection;

  UpstreamResult attempt(std::span<const std::uint8_t> query_bytes, std::uint32_t index);
  std::shared_ptr<Connection> acquire(std::uint32_t index);
  void release(std::uint32_t index, std::shared_ptr<Connection> conn);

  ResolverPool pool_;
  std::int64_t timeout_ms_;
  FailoverMode mode_;
  std::string probe_name_ = "example.com";

  mutable std::mutex mutex_;
  std::vector<std::vector<std::shared_ptr<Connection>>> idle_;  // per recursor
  std::vector<HealthStatus> health_;
};

}  // namespace kres
