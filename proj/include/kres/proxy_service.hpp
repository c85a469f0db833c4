#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "kres/attribution.hpp"
#include "kres/cache.hpp"
#include "kres/config.hpp"
#include "kres/doh_transport.hpp"
#include "kres/query_log.hpp"

namespace kres {

// The resolution pipeline plus its listeners: plaintext DNS over UDP/TCP in,
// DoH out, with attribution, salted assignment, caching and a query log in
// between. One instance per process; configuration is immutable after
// construction.
class ProxyServer {
 public:
  ProxyServer(ProxyConfig config, const SuffixRules& rules);
  ~ProxyServer();

  ProxyServer(const ProxyServer&) = delete;
  ProxyServer& operator=(const ProxyServer&) = delete;

  // Binds UDP + TCP on listen_address and the control channel on
  // control_address, then serves until stop(). Throws ConfigError on bind
  // failure. Port 0 picks an ephemeral port (see udp_port()/tcp_port()).
  void start();
  void stop();
  bool running() const { return running_; }

  std::uint16_t udp_port() const { return udp_port_; }
  std::uint16_t tcp_port() const { return tcp_port_; }
  std::uint16_t control_port() const { return control_port_; }

  // The pipeline itself: decode -> canonicalize -> cache -> classify ->
  // assign -> exchange -> cache insert -> respond. Always returns response
  // bytes (FORMERR/SERVFAIL on errors) and appends exactly one log record.
  // UDP responses are truncated (TC) at the client's advertised payload
  // size; TCP responses never are. Exposed for direct-driving in tests.
  std::vector<std::uint8_t> handle_query(std::span<const std::uint8_t> raw_query,
                                         const std::string& client_id, std::int64_t now_ms,
                                         bool via_tcp = false);

  void flush_cache();
  SessionTable& sessions() { return sessions_; }
  DohClient& transport() { return doh_; }
  QueryLog& log() { return log_; }
  const ProxyConfig& config() const { return config_; }

 private:
  struct UdpJob {
    std::vector<std::uint8_t> data;
    std::string client_ip;
    struct sockaddr_storage addr;
    std::uint32_t addr_len;
  };

  void udp_loop();
  void tcp_loop();
  void control_loop();
  void worker_loop();
  void handle_tcp_conn(int fd, std::string client_ip);
  std::string handle_control_line(const std::string& line);

  ProxyConfig config_;
  const SuffixRules& rules_;
  DnsCache cache_;
  SessionTable sessions_;
  DohClient doh_;
  QueryLog log_;

  std::atomic<bool> running_{false};
  int udp_fd_ = -1;
  int tcp_fd_ = -1;
  int control_fd_ = -1;
  std::uint16_t udp_port_ = 0;
  std::uint16_t tcp_port_ = 0;
  std::uint16_t control_port_ = 0;

  std::thread udp_thread_;
  std::thread tcp_thread_;
  std::thread control_thread_;
  std::vector<std::thread> workers_;
  std::vector<std::thread> conn_threads_;
  std::mutex conn_mutex_;

  std::mutex queue_mutex_;
  std::condition_variable queue_cv_;
  std::deque<UdpJob> queue_;

  static constexpr int kWorkerCount = 4;
};

// Parses "host:port"; throws ConfigError on anything else.
std::pair<std::string, std::uint16_t> parse_host_port(const std::string& address);

}  // namespace kres
