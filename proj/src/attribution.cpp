#include "kres/attribution.hpp"

#include "kres/assignment.hpp"

namespace kres {

std::string assignment_domain(const Classification& c, std::string_view qname,
                              const SuffixRules& rules) {
  if (c.kind == Classification::Kind::Subresource) return c.parent;
  return registrable_domain(qname, rules);
}

Classification SessionTable::classify_query(const std::string& client_id,
                                            std::string_view qname, std::int64_t now_ms) {
  std::lock_guard<std::mutex> lock(mutex_);
  auto it = sessions_.find(client_id);
  bool fresh = it != sessions_.end() &&
               now_ms - it->second.last_activity_ms <= policy_.t_idle_ms &&
               now_ms - it->second.started_at_ms <= policy_.w_max_ms;
  if (fresh) {
    it->second.last_activity_ms = now_ms;
    return Classification{Classification::Kind::Subresource, it->second.parent};
  }
  std::string parent = registrable_domain(qname, *rules_);
  sessions_[client_id] = ClientSession{client_id, parent, now_ms, now_ms};
  return Classification{Classification::Kind::Parent, parent};
}

ClientSession SessionTable::tag_parent(const std::string& client_id, std::string_view domain,
                                       std::int64_t now_ms) {
  if (domain.empty()) throw DnsNameError("tag: empty domain");
  std::string parent = registrable_domain(canonicalize_qname(domain), *rules_);
  std::lock_guard<std::mutex> lock(mutex_);
  ClientSession session{client_id, parent, now_ms, now_ms};
  sessions_[client_id] = session;
  return session;
}

void SessionTable::expire_sessions(std::int64_t now_ms) {
  std::lock_guard<std::mutex> lock(mutex_);
  for (auto it = sessions_.begin(); it != sessions_.end();) {
    if (now_ms - it->second.last_activity_ms > policy_.w_max_ms) {
      it = sessions_.erase(it);
    } else {
      ++it;
    }
  }
}

std::optional<ClientSession> SessionTable::session(const std::string& client_id) const {
  std::lock_guard<std::mutex> lock(mutex_);
  auto it = sessions_.find(client_id);
  if (it == sessions_.end()) return std::nullopt;
  return it->second;
}

std::size_t SessionTable::size() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return sessions_.size();
}

}  // namespace kres
