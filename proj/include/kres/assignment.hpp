#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

#include "kres/public_suffix.hpp"
#include "kres/salt.hpp"

namespace kres {

struct DnsNameError : std::runtime_error {
  explicit DnsNameError(const std::string& what) : std::runtime_error(what) {}
};

// Lowercases A-Z and strips a single trailing root dot. IDN labels stay in
// punycode; no Unicode handling. Enforces the RFC 1035 limits (labels 1..63
// octets, presentation form at most 253 chars) and rejects anything outside
// visible ASCII. "." canonicalizes to the empty root name.
std::string canonicalize_qname(std::string_view raw);

// Public-suffix+1 reduction of a canonical name. Total on canonical names:
// names that are themselves a public suffix come back unchanged.
std::string registrable_domain(std::string_view canonical, const SuffixRules& rules);

// index = (first 8 bytes of SHA-256(domain || 0x00 || salt), big-endian) mod k.
// The 0x00 separator keeps (domain, salt) pairs unambiguous. Stable across
// runs, platforms and implementations.
std::uint32_t assign_recursor(std::string_view domain, const Salt& salt, std::uint32_t k);

// One fixed (domain, salt, k) -> index fact, recomputable at any time.
struct AssignmentRecord {
  std::string domain;
  Salt salt;
  std::uint32_t k = 1;
  std::uint32_t index = 0;

  static AssignmentRecord make(std::string domain, const Salt& salt, std::uint32_t k);
  bool consistent() const { return index == assign_recursor(domain, salt, k); }
};

}  // namespace kres
