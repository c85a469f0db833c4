#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "kres/salt.hpp"

namespace kres {

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

enum class HttpMethod { Get, Post };

std::string to_string(HttpMethod m);

// One DoH upstream.
struct RecursorSpec {
  std::string name;
  std::string url;
  HttpMethod method = HttpMethod::Post;
  bool anycast = false;
  std::string location = "anycast";
  bool filtering = false;
  bool enabled = true;
};

// Ordered, curated upstream list. Order is load-bearing: the assignment
// index is a position in this list, so it must be stable across restarts
// for a given config file.
struct ResolverPool {
  std::vector<RecursorSpec> recursors;

  std::uint32_t k() const { return static_cast<std::uint32_t>(recursors.size()); }
};

struct AttributionPolicy {
  std::int64_t t_idle_ms = 2000;
  std::int64_t w_max_ms = 30000;
};

enum class FailoverMode { Strict, Relaxed };

struct ProxyConfig {
  std::string listen_address = "127.0.0.1:5353";
  std::string control_address = "127.0.0.1:5390";
  ResolverPool pool;
  // Empty only when loaded with SaltPolicy::Optional (pool inspection);
  // serving and assignment always require it.
  std::optional<Salt> salt;
  AttributionPolicy attribution;
  std::int64_t cache_max_ttl_s = 300;
  std::int64_t query_timeout_ms = 5000;
  FailoverMode failover_mode = FailoverMode::Strict;
  std::string log_path = "query_log.csv";
  std::size_t cache_capacity = 4096;
  // Optional override for the bundled public suffix snapshot.
  std::string suffix_list_path;

  const Salt& require_salt() const;
};

enum class SaltPolicy { Required, Optional };

// Parses and fully validates a JSON config. Missing optional fields take
// the documented defaults; the pool is curated (enabled, non-filtering
// entries only) before it lands in the result. Throws ConfigError with the
// offending field or line.
ProxyConfig load_config(const std::string& path, SaltPolicy salt_policy = SaltPolicy::Required);

// Keeps only entries with enabled=true and filtering=false, preserving
// input order. Throws ConfigError if nothing survives.
ResolverPool curate_pool(const std::vector<RecursorSpec>& raw);

// Inserts a generated salt into an existing config file that lacks one.
// Refuses to overwrite: fixation dies if the salt changes under a user.
Salt write_salt_to_config(const std::string& path);

}  // namespace kres
