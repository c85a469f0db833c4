#include "kres/proxy_service.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>

#include "kres/assignment.hpp"

namespace kres {

namespace {

constexpr std::size_t kMinUdpPayload = 512;

std::int64_t steady_now_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

void set_timeout(int fd, int ms) {
  timeval tv{};
  tv.tv_sec = ms / 1000;
  tv.tv_usec = ms % 1000 * 1000;
  ::setsockopt(fd, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof(tv));
}

int bind_socket(int type, const std::string& host, std::uint16_t port,
                std::uint16_t* bound_port) {
  int fd = ::socket(AF_INET, type, 0);
  if (fd < 0) throw ConfigError("socket: " + std::string(std::strerror(errno)));
  int one = 1;
  ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
    ::close(fd);
    throw ConfigError("listen address is not an IPv4 address: " + host);
  }
  if (::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) < 0) {
    std::string err = std::strerror(errno);
    ::close(fd);
    throw ConfigError("cannot bind " + host + ":" + std::to_string(port) + ": " + err);
  }
  sockaddr_in actual{};
  socklen_t len = sizeof(actual);
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&actual), &len);
  *bound_port = ntohs(actual.sin_port);
  if (type == SOCK_STREAM && ::listen(fd, 16) < 0) {
    std::string err = std::strerror(errno);
    ::close(fd);
    throw ConfigError("listen: " + err);
  }
  return fd;
}

std::string addr_to_ip(const sockaddr_storage& ss) {
  char buf[INET6_ADDRSTRLEN] = {0};
  if (ss.ss_family == AF_INET) {
    const auto* v4 = reinterpret_cast<const sockaddr_in*>(&ss);
    ::inet_ntop(AF_INET, &v4->sin_addr, buf, sizeof(buf));
  } else {
    const auto* v6 = reinterpret_cast<const sockaddr_in6*>(&ss);
    ::inet_ntop(AF_INET6, &v6->sin6_addr, buf, sizeof(buf));
  }
  return buf;
}

// EDNS0 advertised payload size from the query's OPT record, if any.
std::size_t udp_payload_limit(const DnsMessage& query) {
  for (const auto& rec : query.additional) {
    if (rec.type == dns::kTypeOpt) {
      return std::max<std::size_t>(kMinUdpPayload, rec.rclass);
    }
  }
  return kMinUdpPayload;
}

void decrement_ttls(DnsMessage& msg, std::int64_t elapsed_s) {
  auto adjust = [elapsed_s](std::vector<DnsRecord>& records) {
    for (auto& rec : records) {
      if (rec.type == dns::kTypeOpt) continue;  // OPT's ttl field holds flags
      rec.ttl = elapsed_s >= rec.ttl ? 0 : rec.ttl - static_cast<std::uint32_t>(elapsed_s);
    }
  };
  adjust(msg.answers);
  adjust(msg.authority);
  adjust(msg.additional);
}

}  // namespace

std::pair<std::string, std::uint16_t> parse_host_port(const std::string& address) {
  auto colon = address.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == address.size()) {
    throw ConfigError("address must be host:port, got \"" + address + "\"");
  }
  std::string host = address.substr(0, colon);
  int port = 0;
  try {
    port = std::stoi(address.substr(colon + 1));
  } catch (const std::exception&) {
    throw ConfigError("invalid port in \"" + address + "\"");
  }
  if (port < 0 || port > 0xffff) throw ConfigError("port out of range in \"" + address + "\"");
  return {host, static_cast<std::uint16_t>(port)};
}

ProxyServer::ProxyServer(ProxyConfig config, const SuffixRules& rules)
    : config_(std::move(config)),
      rules_(rules),
      cache_(config_.cache_capacity, config_.cache_max_ttl_s),
      sessions_(config_.attribution, rules_),
      doh_(config_.pool, config_.query_timeout_ms, config_.failover_mode),
      log_(config_.log_path) {
  config_.require_salt();
}

ProxyServer::~ProxyServer() { stop(); }

std::vector<std::uint8_t> ProxyServer::handle_query(std::span<const std::uint8_t> raw_query,
                                                    const std::string& client_id,
                                                    std::int64_t now_ms) {
  QueryLogRecord rec;
  rec.wall_time = iso8601_now();
  rec.client_id = client_id;
  std::uint16_t qid =
      raw_query.size() >= 2 ? static_cast<std::uint16_t>(raw_query[0] << 8 | raw_query[1]) : 0;

  DnsMessage query;
  std::string qname;
  try {
    query = decode_message(raw_query);
    if (query.flags.qr() || query.flags.opcode() != 0) {
      throw WireFormatError("not a standard query", 2);
    }
    qname = canonicalize_qname(query.question.qname);
  } catch (const std::exception&) {
    rec.recursor_index = "-";
    rec.outcome = QueryOutcome::FormErr;
    log_.append(rec);
    return make_header_error(qid, dns::kRcodeFormErr);
  }

  rec.qname = qname;
  const std::size_t payload_limit = udp_payload_limit(query);
  QueryKey key{qname, query.question.qtype};

  auto finish = [&](DnsMessage response) {
    response.id = qid;
    response.question = query.question;  // echo the client's exact question
    auto bytes = encode_message(response);
    if (payload_limit > 0 && bytes.size() > payload_limit && !tcp_response_) {
      DnsMessage truncated;
      truncated.id = qid;
      truncated.flags = response.flags;
      truncated.flags.set_tc(true);
      truncated.question = query.question;
      bytes = encode_message(truncated);
    }
    return bytes;
  };

  try {
    if (auto entry = cache_.get(key, now_ms)) {
      DnsMessage response = entry->response;
      decrement_ttls(response, (now_ms - entry->inserted_at_ms) / 1000);
      rec.assignment_domain = registrable_domain(qname, rules_);
      rec.recursor_index = "cache";
      rec.cache_hit = true;
      rec.outcome = QueryOutcome::Ok;
      log_.append(rec);
      return finish(std::move(response));
    }

    auto classification = sessions_.classify_query(client_id, qname, now_ms);
    const std::string domain = assignment_domain(classification, qname, rules_);
    rec.assignment_domain = domain;
    const std::uint32_t index =
        assign_recursor(domain, config_.require_salt(), config_.pool.k());

    DnsMessage upstream_query = query;
    upstream_query.id = 0;  // required for GET, cache-friendly for POST
    auto result = doh_.exchange(encode_message(upstream_query), index);
    rec.rtt_ms = result.rtt_ms;
    rec.recursor_index = std::to_string(result.recursor_index);

    if (result.ok()) {
      cache_.put(key, *result.message, static_cast<std::uint32_t>(result.recursor_index),
                 now_ms);
      rec.outcome = QueryOutcome::Ok;
      log_.append(rec);
      return finish(std::move(*result.message));
    }

    rec.outcome = result.error == TransportError::Timeout ? QueryOutcome::Timeout
                                                          : QueryOutcome::ServFail;
    log_.append(rec);
    DnsMessage servfail;
    servfail.flags.word = query.flags.word;
    servfail.flags.set_qr(true);
    servfail.flags.set_ra(true);
    servfail.flags.set_rcode(dns::kRcodeServFail);
    return finish(std::move(servfail));
  } catch (const std::exception& e) {
    // The listener must survive anything the pipeline throws.
    rec.recursor_index = rec.recursor_index.empty() ? "-" : rec.recursor_index;
    rec.outcome = QueryOutcome::ServFail;
    log_.append(rec);
    DnsMessage servfail;
    servfail.flags.set_qr(true);
    servfail.flags.set_rcode(dns::kRcodeServFail);
    return finish(std::move(servfail));
  }
}

void ProxyServer::flush_cache() { cache_.clear(); }

void ProxyServer::start() {
  if (running_) return;
  auto [listen_host, listen_port] = parse_host_port(config_.listen_address);
  auto [control_host, control_port] = parse_host_port(config_.control_address);

  udp_fd_ = bind_socket(SOCK_DGRAM, listen_host, listen_port, &udp_port_);
  // TCP shares the UDP port so one listen_address serves both transports.
  try {
    tcp_fd_ = bind_socket(SOCK_STREAM, listen_host, udp_port_, &tcp_port_);
    control_fd_ = bind_socket(SOCK_STREAM, control_host, control_port, &control_port_);
  } catch (...) {
    if (udp_fd_ >= 0) ::close(udp_fd_);
    if (tcp_fd_ >= 0) ::close(tcp_fd_);
    udp_fd_ = tcp_fd_ = -1;
    throw;
  }
  set_timeout(udp_fd_, 200);

  running_ = true;
  udp_thread_ = std::thread(&ProxyServer::udp_loop, this);
  tcp_thread_ = std::thread(&ProxyServer::tcp_loop, this);
  control_thread_ = std::thread(&ProxyServer::control_loop, this);
  for (int i = 0; i < kWorkerCount; ++i) {
    workers_.emplace_back(&ProxyServer::worker_loop, this);
  }
}

void ProxyServer::stop() {
  if (!running_) return;
  running_ = false;
  queue_cv_.notify_all();
  if (udp_thread_.joinable()) udp_thread_.join();
  if (tcp_thread_.joinable()) tcp_thread_.join();
  if (control_thread_.joinable()) control_thread_.join();
  for (auto& w : workers_) {
    if (w.joinable()) w.join();
  }
  workers_.clear();
  {
    std::lock_guard<std::mutex> lock(conn_mutex_);
    for (auto& t : conn_threads_) {
      if (t.joinable()) t.join();
    }
    conn_threads_.clear();
  }
  if (udp_fd_ >= 0) ::close(udp_fd_);
  if (tcp_fd_ >= 0) ::close(tcp_fd_);
  if (control_fd_ >= 0) ::close(control_fd_);
  udp_fd_ = tcp_fd_ = control_fd_ = -1;
  log_.flush();
}

void ProxyServer::udp_loop() {
  while (running_) {
    UdpJob job;
    job.addr_len = sizeof(job.addr);
    std::uint8_t buf[65535];
    ssize_t n = ::recvfrom(udp_fd_, buf, sizeof(buf), 0,
                           reinterpret_cast<sockaddr*>(&job.addr),
                           reinterpret_cast<socklen_t*>(&job.addr_len));
    if (n < 0) continue;  // timeout tick or transient error
    job.data.assign(buf, buf + n);
    job.client_ip = addr_to_ip(job.addr);
    {
      std::lock_guard<std::mutex> lock(queue_mutex_);
      queue_.push_back(std::move(job));
    }
    queue_cv_.notify_one();
  }
}

void ProxyServer::worker_loop() {
  while (true) {
    UdpJob job;
    {
      std::unique_lock<std::mutex> lock(queue_mutex_);
      queue_cv_.wait(lock, [this] { return !queue_.empty() || !running_; });
      if (queue_.empty()) {
        if (!running_) return;
        continue;
      }
      job = std::move(queue_.front());
      queue_.pop_front();
    }
    auto response = handle_query(job.data, job.client_ip, steady_now_ms());
    ::sendto(udp_fd_, response.data(), response.size(), 0,
             reinterpret_cast<const sockaddr*>(&job.addr), job.addr_len);
  }
}

void ProxyServer::tcp_loop() {
  while (running_) {
    pollfd pfd{tcp_fd_, POLLIN, 0};
    int ready = ::poll(&pfd, 1, 200);
    if (ready <= 0) continue;
    sockaddr_storage addr{};
    socklen_t addr_len = sizeof(addr);
    int conn = ::accept(tcp_fd_, reinterpret_cast<sockaddr*>(&addr), &addr_len);
    if (conn < 0) continue;
    std::string ip = addr_to_ip(addr);
    std::lock_guard<std::mutex> lock(conn_mutex_);
    conn_threads_.emplace_back(&ProxyServer::handle_tcp_conn, this, conn, std::move(ip));
  }
}

void ProxyServer::handle_tcp_conn(int fd, std::string client_ip) {
  set_timeout(fd, 500);
  while (running_) {
    std::uint8_t len_buf[2];
    ssize_t n = ::recv(fd, len_buf, 2, MSG_WAITALL);
    if (n == 0) break;  // peer closed
    if (n < 0) {
      if (errno == EAGAIN || errno == EWOULDBLOCK) continue;  // idle, re-check running_
      break;
    }
    if (n != 2) break;
    std::size_t msg_len = static_cast<std::size_t>(len_buf[0]) << 8 | len_buf[1];
    std::vector<std::uint8_t> msg(msg_len);
    std::size_t got = 0;
    bool fail = false;
    while (got < msg_len) {
      ssize_t m = ::recv(fd, msg.data() + got, msg_len - got, 0);
      if (m <= 0) {
        if (m < 0 && (errno == EAGAIN || errno == EWOULDBLOCK)) continue;
        fail = true;
        break;
      }
      got += static_cast<std::size_t>(m);
    }
    if (fail) break;
    tcp_response_ = true;
    auto response = handle_query(msg, client_ip, steady_now_ms());
    tcp_response_ = false;
    std::uint8_t prefix[2] = {static_cast<std::uint8_t>(response.size() >> 8),
                              static_cast<std::uint8_t>(response.size() & 0xff)};
    if (::send(fd, prefix, 2, MSG_NOSIGNAL) != 2) break;
    if (::send(fd, response.data(), response.size(), MSG_NOSIGNAL) !=
        static_cast<ssize_t>(response.size())) {
      break;
    }
  }
  ::close(fd);
}

void ProxyServer::control_loop() {
  while (running_) {
    pollfd pfd{control_fd_, POLLIN, 0};
    int ready = ::poll(&pfd, 1, 200);
    if (ready <= 0) continue;
    sockaddr_storage addr{};
    socklen_t addr_len = sizeof(addr);
    int conn = ::accept(control_fd_, reinterpret_cast<sockaddr*>(&addr), &addr_len);
    if (conn < 0) continue;
    std::lock_guard<std::mutex> lock(conn_mutex_);
    conn_threads_.emplace_back(
        [this, conn] {
          set_timeout(conn, 500);
          std::string buffer;
          while (running_) {
            char c;
            ssize_t n = ::recv(conn, &c, 1, 0);
            if (n == 0) break;
            if (n < 0) {
              if (errno == EAGAIN || errno == EWOULDBLOCK) continue;
              break;
            }
            if (c != '\n') {
              buffer.push_back(c);
              if (buffer.size() > 4096) break;  // line too long, drop the peer
              continue;
            }
            std::string reply = handle_control_line(buffer) + "\n";
            buffer.clear();
            if (::send(conn, reply.data(), reply.size(), MSG_NOSIGNAL) !=
                static_cast<ssize_t>(reply.size())) {
              break;
            }
          }
          ::close(conn);
        });
  }
}

std::string ProxyServer::handle_control_line(const std::string& line) {
  std::string trimmed = line;
  while (!trimmed.empty() && (trimmed.back() == '\r' || trimmed.back() == ' ')) {
    trimmed.pop_back();
  }
  if (trimmed == "FLUSH_CACHE") {
    flush_cache();
    return "OK";
  }
  if (trimmed.rfind("TAG ", 0) == 0) {
    auto rest = trimmed.substr(4);
    auto space = rest.find(' ');
    if (space == std::string::npos || space == 0 || space + 1 == rest.size()) {
      return "ERR usage: TAG <client-ip> <domain>";
    }
    std::string client = rest.substr(0, space);
    std::string domain = rest.substr(space + 1);
    try {
      sessions_.tag_parent(client, domain, steady_now_ms());
      return "OK";
    } catch (const std::exception& e) {
      return std::string("ERR ") + e.what();
    }
  }
  return "ERR unknown command";
}

}  // namespace kres
