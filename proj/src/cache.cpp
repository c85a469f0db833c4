#include "kres/cache.hpp"

#include <algorithm>

namespace kres {

std::optional<DnsCache::Entry> DnsCache::get(const QueryKey& key, std::int64_t now_ms) {
  std::lock_guard<std::mutex> lock(mutex_);
  auto it = index_.find(key);
  if (it == index_.end()) return std::nullopt;
  if (it->second->second.expires_at_ms <= now_ms) {
    lru_.erase(it->second);
    index_.erase(it);
    return std::nullopt;
  }
  lru_.splice(lru_.begin(), lru_, it->second);  // refresh LRU position
  return it->second->second;
}

void DnsCache::put(const QueryKey& key, const DnsMessage& response,
                   std::uint32_t resolved_via, std::int64_t now_ms) {
  if (capacity_ == 0) return;
  std::int64_t ttl_s = 0;
  if (!response.answers.empty()) {
    ttl_s = std::clamp<std::int64_t>(min_ttl(response), 1, max_ttl_s_);
  } else if (response.flags.rcode() == dns::kRcodeNxDomain) {
    ttl_s = std::min<std::int64_t>(kNegativeTtlS, max_ttl_s_);
  } else {
    return;  // nothing cacheable (NODATA, SERVFAIL, ...)
  }

  Entry entry;
  entry.response = response;
  entry.inserted_at_ms = now_ms;
  entry.expires_at_ms = now_ms + ttl_s * 1000;
  entry.resolved_via = resolved_via;

  std::lock_guard<std::mutex> lock(mutex_);
  auto it = index_.find(key);
  if (it != index_.end()) {
    lru_.erase(it->second);
    index_.erase(it);
  }
  lru_.emplace_front(key, std::move(entry));
  index_[key] = lru_.begin();
  while (index_.size() > capacity_) evict_lru_locked();
}

void DnsCache::evict_lru_locked() {
  auto& victim = lru_.back();
  index_.erase(victim.first);
  lru_.pop_back();
}

void DnsCache::clear() {
  std::lock_guard<std::mutex> lock(mutex_);
  lru_.clear();
  index_.clear();
}

std::size_t DnsCache::size() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return index_.size();
}

}  // namespace kres
