#include "kres/doh_transport.hpp"

#include <httplib.h>

#include <chrono>
#include <stdexcept>

namespace kres {

namespace {
constexpr const char* kDnsContentType = "application/dns-message";
constexpr int kMaxAttemptsPerRecursor = 3;  // 1 try + 2 retries

struct ParsedUrl {
  std::string base;  // scheme://host[:port]
  std::string path;  // starts with '/', possibly with query string
};

ParsedUrl parse_url(const std::string& url) {
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw std::invalid_argument("not an absolute URL: " + url);
  }
  auto path_start = url.find('/', scheme_end + 3);
  ParsedUrl out;
  if (path_start == std::string::npos) {
    out.base = url;
    out.path = "/";
  } else {
    out.base = url.substr(0, path_start);
    out.path = url.substr(path_start);
  }
  return out;
}

bool query_has_dns_param(const std::string& url) {
  auto qmark = url.find('?');
  if (qmark == std::string::npos) return false;
  std::string query = url.substr(qmark + 1);
  std::size_t pos = 0;
  while (pos < query.size()) {
    std::size_t amp = query.find('&', pos);
    std::string_view param(query.data() + pos,
                           (amp == std::string::npos ? query.size() : amp) - pos);
    if (param.substr(0, 4) == "dns=" || param == "dns") return true;
    pos = amp == std::string::npos ? query.size() : amp + 1;
  }
  return false;
}
}  // namespace

std::string base64url_encode(std::span<const std::uint8_t> data) {
  static constexpr char kAlphabet[] =
      "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789-_";
  std::string out;
  out.reserve((data.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 3 <= data.size(); i += 3) {
    std::uint32_t v = data[i] << 16 | data[i + 1] << 8 | data[i + 2];
    out.push_back(kAlphabet[v >> 18]);
    out.push_back(kAlphabet[v >> 12 & 0x3f]);
    out.push_back(kAlphabet[v >> 6 & 0x3f]);
    out.push_back(kAlphabet[v & 0x3f]);
  }
  if (i + 1 == data.size()) {
    std::uint32_t v = data[i] << 16;
    out.push_back(kAlphabet[v >> 18]);
    out.push_back(kAlphabet[v >> 12 & 0x3f]);
  } else if (i + 2 == data.size()) {
    std::uint32_t v = data[i] << 16 | data[i + 1] << 8;
    out.push_back(kAlphabet[v >> 18]);
    out.push_back(kAlphabet[v >> 12 & 0x3f]);
    out.push_back(kAlphabet[v >> 6 & 0x3f]);
  }
  return out;
}

DohRequest build_doh_request(std::span<const std::uint8_t> query_bytes,
                             const RecursorSpec& recursor) {
  if (query_has_dns_param(recursor.url)) {
    throw std::invalid_argument("recursor URL already carries a dns parameter: " +
                                recursor.url);
  }
  DohRequest req;
  req.method = recursor.method;
  if (recursor.method == HttpMethod::Post) {
    req.url = recursor.url;
    req.headers = {{"Content-Type", kDnsContentType}, {"Accept", kDnsContentType}};
    req.body.assign(query_bytes.begin(), query_bytes.end());
    return req;
  }
  // GET: the id must be zeroed by the caller so identical questions encode
  // identically (HTTP cache friendliness).
  if (query_bytes.size() >= 2 && (query_bytes[0] != 0 || query_bytes[1] != 0)) {
    throw std::invalid_argument("GET requires the DNS message id to be 0");
  }
  req.url = recursor.url + (recursor.url.find('?') == std::string::npos ? "?dns=" : "&dns=") +
            base64url_encode(query_bytes);
  req.headers = {{"Accept", kDnsContentType}};
  return req;
}

std::string to_string(TransportError e) {
  switch (e) {
    case TransportError::None: return "none";
    case TransportError::Connect: return "connect";
    case TransportError::Timeout: return "timeout";
    case TransportError::Tls: return "tls";
    case TransportError::HttpStatus: return "http-status";
    case TransportError::ContentType: return "content-type";
    case TransportError::Decode: return "decode";
  }
  return "unknown";
}

struct DohClient::Connection {
  explicit Connection(const std::string& base) : client(base) {}
  httplib::Client client;
};

DohClient::DohClient(ResolverPool pool, std::int64_t timeout_ms, FailoverMode mode)
    : pool_(std::move(pool)), timeout_ms_(timeout_ms), mode_(mode) {
  idle_.resize(pool_.recursors.size());
  health_.resize(pool_.recursors.size());
  for (std::size_t i = 0; i < health_.size(); ++i) {
    health_[i].recursor_index = static_cast<int>(i);
  }
}

DohClient::~DohClient() = default;

std::shared_ptr<DohClient::Connection> DohClient::acquire(std::uint32_t index) {
  {
    std::lock_guard<std::mutex> lock(mutex_);
    auto& pool = idle_[index];
    if (!pool.empty()) {
      auto conn = pool.back();
      pool.pop_back();
      return conn;
    }
  }
  auto parsed = parse_url(pool_.recursors[index].url);
  auto conn = std::make_shared<Connection>(parsed.base);
  conn->client.set_keep_alive(true);
  conn->client.enable_server_certificate_verification(true);
  auto secs = timeout_ms_ / 1000;
  auto usecs = timeout_ms_ % 1000 * 1000;
  conn->client.set_connection_timeout(secs, usecs);
  conn->client.set_read_timeout(secs, usecs);
  conn->client.set_write_timeout(secs, usecs);
  return conn;
}

void DohClient::release(std::uint32_t index, std::shared_ptr<Connection> conn) {
  std::lock_guard<std::mutex> lock(mutex_);
  idle_[index].push_back(std::move(conn));
}

UpstreamResult DohClient::attempt(std::span<const std::uint8_t> query_bytes,
                                  std::uint32_t index) {
  const auto& spec = pool_.recursors[index];
  UpstreamResult result;
  result.recursor_index = static_cast<int>(index);

  DohRequest req = build_doh_request(query_bytes, spec);
  auto path = parse_url(req.url).path;
  httplib::Headers headers(req.headers.begin(), req.headers.end());

  auto conn = acquire(index);
  auto started = std::chrono::steady_clock::now();
  httplib::Result res =
      req.method == HttpMethod::Post
          ? conn->client.Post(path, headers,
                              reinterpret_cast<const char*>(req.body.data()), req.body.size(),
                              kDnsContentType)
          : conn->client.Get(path, headers);
  result.rtt_ms = std::chrono::duration<double, std::milli>(
                      std::chrono::steady_clock::now() - started)
                      .count();

  if (!res) {
    switch (res.error()) {
      case httplib::Error::ConnectionTimeout:
      case httplib::Error::Read:
      case httplib::Error::Write:
        result.error = TransportError::Timeout;
        break;
      case httplib::Error::SSLConnection:
      case httplib::Error::SSLLoadingCerts:
      case httplib::Error::SSLServerVerification:
        result.error = TransportError::Tls;
        break;
      default:
        result.error = TransportError::Connect;
        break;
    }
    result.error_detail = httplib::to_string(res.error());
    // A failed connection is not reusable; drop it.
    return result;
  }

  release(index, conn);
  result.http_status = res->status;
  if (res->status != 200) {
    result.error = TransportError::HttpStatus;
    result.error_detail = "HTTP " + std::to_string(res->status);
    return result;
  }
  auto content_type = res->get_header_value("Content-Type");
  if (content_type.substr(0, std::string(kDnsContentType).size()) != kDnsContentType) {
    result.error = TransportError::ContentType;
    result.error_detail = "unexpected content-type: " + content_type;
    return result;
  }
  try {
    result.message = decode_message(
        {reinterpret_cast<const std::uint8_t*>(res->body.data()), res->body.size()});
  } catch (const WireFormatError& e) {
    result.error = TransportError::Decode;
    result.error_detail = e.what();
  }
  return result;
}

UpstreamResult DohClient::exchange(std::span<const std::uint8_t> query_bytes,
                                   std::uint32_t index) {
  if (index >= pool_.recursors.size()) {
    throw std::invalid_argument("exchange: recursor index out of range");
  }
  UpstreamResult result;
  int attempts = 0;
  for (int i = 0; i < kMaxAttemptsPerRecursor; ++i) {
    result = attempt(query_bytes, index);
    ++attempts;
    result.attempts = attempts;
    if (result.ok()) return result;
  }
  // Strict mode never contacts any other recursor: failing here keeps the
  // 1/K exposure bound intact at availability cost.
  if (mode_ == FailoverMode::Strict || pool_.recursors.size() < 2) {
    return result;
  }
  auto fallback = static_cast<std::uint32_t>((index + 1) % pool_.recursors.size());
  for (int i = 0; i < kMaxAttemptsPerRecursor; ++i) {
    result = attempt(query_bytes, fallback);
    ++attempts;
    result.attempts = attempts;
    result.failed_over = true;
    if (result.ok()) return result;
  }
  return result;
}

HealthStatus DohClient::probe_health(std::uint32_t index) {
  if (index >= pool_.recursors.size()) {
    throw std::invalid_argument("probe_health: recursor index out of range");
  }
  auto query = encode_query(probe_name_, dns::kTypeA, 0, true);
  auto result = attempt(query, index);
  std::lock_guard<std::mutex> lock(mutex_);
  auto& health = health_[index];
  if (result.ok()) {
    health.reachable = true;
    health.consecutive_failures = 0;
    health.last_probe_rtt_ms = result.rtt_ms;
  } else {
    health.reachable = false;
    health.consecutive_failures += 1;
  }
  return health;
}

HealthStatus DohClient::health(std::uint32_t index) const {
  std::lock_guard<std::mutex> lock(mutex_);
  return health_.at(index);
}

}  // namespace kres
