#pragma once

#include <cstdint>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>

#include "kres/config.hpp"
#include "kres/public_suffix.hpp"

namespace kres {

// Per-client page context reconstructed on the proxy side. The browser knows
// which page triggered a lookup; a proxy only sees a query stream, so we
// bracket bursts with an idle gap (t_idle) and a hard window (w_max).
struct ClientSession {
  std::string client_id;
  std::string parent;  // registrable domain
  std::int64_t started_at_ms = 0;
  std::int64_t last_activity_ms = 0;
};

struct Classification {
  enum class Kind { Parent, Subresource };
  Kind kind = Kind::Parent;
  // Registrable domain governing the assignment: the qname's own for
  // Parent, the session's for Subresource.
  std::string parent;

  bool is_parent() const { return kind == Kind::Parent; }
};

// Parent -> registrable_domain(qname); Subresource(p) -> p. Third-party
// names are hashed as if they were the parent, so every lookup of one page
// lands on one recursor.
std::string assignment_domain(const Classification& c, std::string_view qname,
                              const SuffixRules& rules);

class SessionTable {
 public:
  SessionTable(AttributionPolicy policy, const SuffixRules& rules)
      : policy_(policy), rules_(&rules) {}

  // Parent iff there is no live session: none recorded, idle longer than
  // t_idle, or the session is older than w_max. Classifying as Parent
  // replaces the session; any classification refreshes last_activity.
  Classification classify_query(const std::string& client_id, std::string_view qname,
                                std::int64_t now_ms);

  // Explicit override (control channel): pins the parent for client_id
  // until the usual expiry. Throws DnsNameError on a malformed domain.
  ClientSession tag_parent(const std::string& client_id, std::string_view domain,
                           std::int64_t now_ms);

  // Drops sessions idle longer than w_max; never touches survivors.
  void expire_sessions(std::int64_t now_ms);

  std::optional<ClientSession> session(const std::string& client_id) const;
  std::size_t size() const;

  const AttributionPolicy& policy() const { return policy_; }

 private:
  AttributionPolicy policy_;
  const SuffixRules* rules_;
  mutable std::mutex mutex_;
  std::unordered_map<std::string, ClientSession> sessions_;
};

}  // namespace kres
