#pragma once

#include <cstdint>
#include <list>
#include <mutex>
#include <optional>
#include <unordered_map>
#include <utility>

#include "kres/dns_wire.hpp"

namespace kres {

// Response cache keyed by (qname, qtype) with TTL expiry and LRU eviction.
// The key deliberately omits the recursor index: a third-party name cached
// via one parent's recursor may answer a lookup attributed to another
// parent, which keeps that query off the wire entirely.
class DnsCache {
 public:
  struct Entry {
    DnsMessage response;
    std::int64_t inserted_at_ms = 0;
    std::int64_t expires_at_ms = 0;
    std::uint32_t resolved_via = 0;
  };

  DnsCache(std::size_t capacity, std::int64_t max_ttl_s)
      : capacity_(capacity), max_ttl_s_(max_ttl_s) {}

  // Unexpired entries only; a hit refreshes LRU position.
  std::optional<Entry> get(const QueryKey& key, std::int64_t now_ms);

  // TTL = min answer TTL clamped to [1, max_ttl_s]; NXDOMAIN responses are
  // cached for a fixed 30 s; anything else without answers is not cached.
  void put(const QueryKey& key, const DnsMessage& response, std::uint32_t resolved_via,
           std::int64_t now_ms);

  void clear();
  std::size_t size() const;

  static constexpr std::int64_t kNegativeTtlS = 30;

 private:
  void evict_lru_locked();

  std::size_t capacity_;
  std::int64_t max_ttl_s_;
  mutable std::mutex mutex_;
  std::list<std::pair<QueryKey, Entry>> lru_;  // front = most recent
  std::unordered_map<QueryKey, std::list<std::pair<QueryKey, Entry>>::iterator, QueryKeyHash>
      index_;
};

}  // namespace kres
