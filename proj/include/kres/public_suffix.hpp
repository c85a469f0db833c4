#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>

namespace kres {

// Public suffix rule set in the standard publicsuffix.org line format:
// plain rules, "*." wildcard rules and "!" exception rules. Lookups follow
// the canonical algorithm, including the implicit "*" default rule for
// unlisted TLDs.
class SuffixRules {
 public:
  static SuffixRules from_string(std::string_view text);
  static SuffixRules from_file(const std::string& path);  // throws std::runtime_error
  // Snapshot compiled into the library.
  static const SuffixRules& bundled();

  // name must already be canonical (lowercase, no trailing dot).
  // Returns the public suffix plus one label; if the name is itself a
  // public suffix (or has fewer labels), returns it unchanged.
  std::string registrable_domain(std::string_view name) const;

  bool is_public_suffix(std::string_view name) const;

  std::size_t rule_count() const { return exact_.size() + wildcard_.size() + exception_.size(); }

 private:
  std::unordered_set<std::string> exact_;
  std::unordered_set<std::string> wildcard_;   // stored without the "*." prefix
  std::unordered_set<std::string> exception_;  // stored without the "!" prefix
};

}  // namespace kres
