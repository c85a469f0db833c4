#include "kres/assignment.hpp"

#include <cstring>
#include <stdexcept>
#include <vector>

#include "kres/hashing.hpp"

namespace kres {

std::string canonicalize_qname(std::string_view raw) {
  if (!raw.empty() && raw.back() == '.') raw.remove_suffix(1);  // root dot
  if (raw.size() > 253) {
    throw DnsNameError("name exceeds 253 octets: " + std::string(raw.substr(0, 64)) + "...");
  }
  std::string out;
  out.reserve(raw.size());
  std::size_t label_len = 0;
  for (char c : raw) {
    if (c == '.') {
      if (label_len == 0) throw DnsNameError("empty label in name");
      label_len = 0;
      out.push_back('.');
      continue;
    }
    ++label_len;
    if (label_len > 63) throw DnsNameError("label exceeds 63 octets");
    auto uc = static_cast<unsigned char>(c);
    if (uc < 0x21 || uc > 0x7e) {
      throw DnsNameError("invalid character (byte " + std::to_string(uc) + ") in name");
    }
    out.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a') : c);
  }
  if (!raw.empty() && label_len == 0) throw DnsNameError("empty label in name");
  return out;
}

std::string registrable_domain(std::string_view canonical, const SuffixRules& rules) {
  return rules.registrable_domain(canonical);
}

std::uint32_t assign_recursor(std::string_view domain, const Salt& salt, std::uint32_t k) {
  if (k == 0) throw std::invalid_argument("assign_recursor: k must be >= 1");
  std::vector<std::uint8_t> buf;
  buf.reserve(domain.size() + 1 + salt.bytes.size());
  buf.insert(buf.end(), domain.begin(), domain.end());
  buf.push_back(0x00);
  buf.insert(buf.end(), salt.bytes.begin(), salt.bytes.end());
  auto digest = sha256(buf);
  std::uint64_t value = 0;
  for (int i = 0; i < 8; ++i) value = value << 8 | digest[i];
  return static_cast<std::uint32_t>(value % k);
}

AssignmentRecord AssignmentRecord::make(std::string domain, const Salt& salt, std::uint32_t k) {
  AssignmentRecord rec;
  rec.index = assign_recursor(domain, salt, k);
  rec.domain = std::move(domain);
  rec.salt = salt;
  rec.k = k;
  return rec;
}

}  // namespace kres
