#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace kres {

struct WireFormatError : std::runtime_error {
  WireFormatError(const std::string& what, std::size_t offset)
      : std::runtime_error(what + " (at offset " + std::to_string(offset) + ")"),
        offset(offset) {}
  std::size_t offset;
};

namespace dns {
inline constexpr std::uint16_t kTypeA = 1;
inline constexpr std::uint16_t kTypeNs = 2;
inline constexpr std::uint16_t kTypeCname = 5;
inline constexpr std::uint16_t kTypeSoa = 6;
inline constexpr std::uint16_t kTypePtr = 12;
inline constexpr std::uint16_t kTypeMx = 15;
inline constexpr std::uint16_t kTypeAaaa = 28;
inline constexpr std::uint16_t kTypeSrv = 33;
inline constexpr std::uint16_t kTypeOpt = 41;
inline constexpr std::uint16_t kClassIn = 1;

inline constexpr std::uint8_t kRcodeNoError = 0;
inline constexpr std::uint8_t kRcodeFormErr = 1;
inline constexpr std::uint8_t kRcodeServFail = 2;
inline constexpr std::uint8_t kRcodeNxDomain = 3;
inline constexpr std::uint8_t kRcodeNotImp = 4;
}  // namespace dns

// Raw 16-bit flags word with field accessors; keeping the word intact
// preserves bits we do not interpret (AD/CD/Z) across decode/encode.
struct DnsFlags {
  std::uint16_t word = 0;

  bool qr() const { return word & 0x8000; }
  std::uint8_t opcode() const { return (word >> 11) & 0x0f; }
  bool aa() const { return word & 0x0400; }
  bool tc() const { return word & 0x0200; }
  bool rd() const { return word & 0x0100; }
  bool ra() const { return word & 0x0080; }
  std::uint8_t rcode() const { return word & 0x000f; }

  void set_qr(bool v) { word = v ? (word | 0x8000) : (word & ~0x8000); }
  void set_tc(bool v) { word = v ? (word | 0x0200) : (word & ~0x0200); }
  void set_rd(bool v) { word = v ? (word | 0x0100) : (word & ~0x0100); }
  void set_ra(bool v) { word = v ? (word | 0x0080) : (word & ~0x0080); }
  void set_rcode(std::uint8_t rc) { word = (word & ~0x000f) | (rc & 0x0f); }

  bool operator==(const DnsFlags&) const = default;
};

struct DnsQuestion {
  std::string qname;
  std::uint16_t qtype = dns::kTypeA;
  std::uint16_t qclass = dns::kClassIn;

  bool operator==(const DnsQuestion&) const = default;
};

struct DnsRecord {
  std::string name;
  std::uint16_t type = 0;
  std::uint16_t rclass = 0;
  std::uint32_t ttl = 0;
  std::vector<std::uint8_t> rdata;

  bool operator==(const DnsRecord&) const = default;
};

// Exactly one question; that is the only shape the proxy handles.
// Names inside rdata of the well-known name-bearing types (NS, CNAME, SOA,
// PTR, MX, SRV) are stored decompressed so records re-encode standalone;
// all other rdata is opaque.
struct DnsMessage {
  std::uint16_t id = 0;
  DnsFlags flags;
  DnsQuestion question;
  std::vector<DnsRecord> answers;
  std::vector<DnsRecord> authority;
  std::vector<DnsRecord> additional;

  bool operator==(const DnsMessage&) const = default;
};

// Cache key: canonical qname + qtype.
struct QueryKey {
  std::string qname;
  std::uint16_t qtype = dns::kTypeA;

  bool operator==(const QueryKey&) const = default;
};

struct QueryKeyHash {
  std::size_t operator()(const QueryKey& k) const {
    return std::hash<std::string>{}(k.qname) * 31 + k.qtype;
  }
};

// Wire-format query with QDCOUNT=1 and no compression. qname must be
// canonical. Throws WireFormatError if the name exceeds the RFC limits.
std::vector<std::uint8_t> encode_query(std::string_view qname, std::uint16_t qtype,
                                       std::uint16_t id, bool rd);

std::vector<std::uint8_t> encode_message(const DnsMessage& msg);

// Full parse including compression-pointer resolution. Pointers must point
// strictly backwards (kills loops); truncated buffers, count mismatches and
// trailing bytes all raise WireFormatError with the offending offset.
DnsMessage decode_message(std::span<const std::uint8_t> buffer);

// Minimum TTL across answer records; throws std::invalid_argument when the
// message has no answers.
std::uint32_t min_ttl(const DnsMessage& msg);

// A/AAAA as IP text, CNAME as the target name; opaque types come back as
// hex bytes.
std::string rdata_text(const DnsRecord& record);

// 12-byte header-only error response (used when the query is too broken to
// echo its question back).
std::vector<std::uint8_t> make_header_error(std::uint16_t id, std::uint8_t rcode);

}  // namespace kres
