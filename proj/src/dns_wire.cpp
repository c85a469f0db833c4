#include "kres/dns_wire.hpp"

#include <algorithm>
#include <limits>

#include "kres/hashing.hpp"

namespace kres {

namespace {

constexpr std::size_t kHeaderSize = 12;
constexpr std::size_t kMaxNameWire = 255;

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v & 0xff));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16 & 0xff));
  out.push_back(static_cast<std::uint8_t>(v >> 8 & 0xff));
  out.push_back(static_cast<std::uint8_t>(v & 0xff));
}

// Uncompressed name encoding; presentation form "" means the root.
void put_name(std::vector<std::uint8_t>& out, std::string_view name) {
  if (name.size() > 253) throw WireFormatError("name too long", out.size());
  std::size_t start = 0;
  while (start < name.size()) {
    std::size_t dot = name.find('.', start);
    std::size_t len = (dot == std::string_view::npos ? name.size() : dot) - start;
    if (len == 0) throw WireFormatError("empty label", out.size());
    if (len > 63) throw WireFormatError("label too long", out.size());
    out.push_back(static_cast<std::uint8_t>(len));
    out.insert(out.end(), name.begin() + start, name.begin() + start + len);
    start = dot == std::string_view::npos ? name.size() : dot + 1;
    if (dot != std::string_view::npos && start == name.size()) {
      throw WireFormatError("empty label", out.size());
    }
  }
  out.push_back(0);
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> buf) : buf_(buf) {}

  std::size_t pos() const { return pos_; }
  std::size_t size() const { return buf_.size(); }
  bool at_end() const { return pos_ == buf_.size(); }

  std::uint8_t u8() {
    need(1);
    return buf_[pos_++];
  }
  std::uint16_t u16() {
    need(2);
    std::uint16_t v = static_cast<std::uint16_t>(buf_[pos_] << 8 | buf_[pos_ + 1]);
    pos_ += 2;
    return v;
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = static_cast<std::uint32_t>(buf_[pos_]) << 24 |
                      static_cast<std::uint32_t>(buf_[pos_ + 1]) << 16 |
                      static_cast<std::uint32_t>(buf_[pos_ + 2]) << 8 | buf_[pos_ + 3];
    pos_ += 4;
    return v;
  }
  std::vector<std::uint8_t> bytes(std::size_t n) {
    need(n);
    std::vector<std::uint8_t> out(buf_.begin() + pos_, buf_.begin() + pos_ + n);
    pos_ += n;
    return out;
  }

  // Name with compression. Pointers must target a strictly earlier offset
  // than any offset already visited, which makes loops impossible.
  std::string name() {
    std::string out;
    std::size_t total_wire = 0;
    std::size_t cursor = pos_;
    std::size_t min_seen = pos_;
    bool jumped = false;
    std::size_t end_after_first_jump = 0;

    while (true) {
      if (cursor >= buf_.size()) throw WireFormatError("truncated name", cursor);
      std::uint8_t len = buf_[cursor];
      if ((len & 0xc0) == 0xc0) {
        if (cursor + 1 >= buf_.size()) throw WireFormatError("truncated pointer", cursor);
        std::size_t target = static_cast<std::size_t>(len & 0x3f) << 8 | buf_[cursor + 1];
        if (!jumped) {
          end_after_first_jump = cursor + 2;
          jumped = true;
        }
        if (target >= min_seen) throw WireFormatError("compression pointer loop", cursor);
        min_seen = target;
        cursor = target;
        continue;
      }
      if ((len & 0xc0) != 0) throw WireFormatError("reserved label type", cursor);
      if (len == 0) {
        cursor += 1;
        break;
      }
      if (cursor + 1 + len > buf_.size()) throw WireFormatError("truncated label", cursor);
      total_wire += len + 1;
      if (total_wire + 1 > kMaxNameWire) throw WireFormatError("name too long", cursor);
      if (!out.empty()) out.push_back('.');
      for (std::size_t i = 0; i < len; ++i) {
        char c = static_cast<char>(buf_[cursor + 1 + i]);
        // A dot inside a label cannot survive a presentation round trip.
        if (c == '.') throw WireFormatError("dot inside label", cursor + 1 + i);
        out.push_back(c);
      }
      cursor += 1 + len;
    }
    pos_ = jumped ? end_after_first_jump : cursor;
    return out;
  }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > buf_.size()) throw WireFormatError("truncated message", pos_);
  }

  std::span<const std::uint8_t> buf_;
  std::size_t pos_ = 0;
};

bool rdata_carries_name(std::uint16_t type) {
  switch (type) {
    case dns::kTypeNs:
    case dns::kTypeCname:
    case dns::kTypeSoa:
    case dns::kTypePtr:
    case dns::kTypeMx:
    case dns::kTypeSrv:
      return true;
    default:
      return false;
  }
}

// Re-encodes rdata of name-bearing types with all names decompressed so
// the record stays valid outside this message.
std::vector<std::uint8_t> decompress_rdata(Reader& reader, std::uint16_t type,
                                           std::size_t rdlength) {
  std::size_t end = reader.pos() + rdlength;
  std::vector<std::uint8_t> out;
  switch (type) {
    case dns::kTypeNs:
    case dns::kTypeCname:
    case dns::kTypePtr:
      put_name(out, reader.name());
      break;
    case dns::kTypeMx: {
      put_u16(out, reader.u16());
      put_name(out, reader.name());
      break;
    }
    case dns::kTypeSrv: {
      put_u16(out, reader.u16());
      put_u16(out, reader.u16());
      put_u16(out, reader.u16());
      put_name(out, reader.name());
      break;
    }
    case dns::kTypeSoa: {
      put_name(out, reader.name());
      put_name(out, reader.name());
      for (int i = 0; i < 5; ++i) put_u32(out, reader.u32());
      break;
    }
    default:
      break;
  }
  if (reader.pos() != end) throw WireFormatError("rdata length mismatch", reader.pos());
  return out;
}

DnsRecord decode_record(Reader& reader) {
  DnsRecord rec;
  rec.name = reader.name();
  rec.type = reader.u16();
  rec.rclass = reader.u16();
  rec.ttl = reader.u32();
  std::uint16_t rdlength = reader.u16();
  if (rdata_carries_name(rec.type)) {
    rec.rdata = decompress_rdata(reader, rec.type, rdlength);
  } else {
    rec.rdata = reader.bytes(rdlength);
  }
  return rec;
}

void encode_record(std::vector<std::uint8_t>& out, const DnsRecord& rec) {
  put_name(out, rec.name);
  put_u16(out, rec.type);
  put_u16(out, rec.rclass);
  put_u32(out, rec.ttl);
  if (rec.rdata.size() > std::numeric_limits<std::uint16_t>::max()) {
    throw WireFormatError("rdata too long", out.size());
  }
  put_u16(out, static_cast<std::uint16_t>(rec.rdata.size()));
  out.insert(out.end(), rec.rdata.begin(), rec.rdata.end());
}

}  // namespace

std::vector<std::uint8_t> encode_query(std::string_view qname, std::uint16_t qtype,
                                       std::uint16_t id, bool rd) {
  DnsMessage msg;
  msg.id = id;
  msg.flags.set_rd(rd);
  msg.question = DnsQuestion{std::string(qname), qtype, dns::kClassIn};
  return encode_message(msg);
}

std::vector<std::uint8_t> encode_message(const DnsMessage& msg) {
  std::vector<std::uint8_t> out;
  out.reserve(kHeaderSize + msg.question.qname.size() + 16);
  put_u16(out, msg.id);
  put_u16(out, msg.flags.word);
  put_u16(out, 1);
  put_u16(out, static_cast<std::uint16_t>(msg.answers.size()));
  put_u16(out, static_cast<std::uint16_t>(msg.authority.size()));
  put_u16(out, static_cast<std::uint16_t>(msg.additional.size()));
  put_name(out, msg.question.qname);
  put_u16(out, msg.question.qtype);
  put_u16(out, msg.question.qclass);
  for (const auto& rec : msg.answers) encode_record(out, rec);
  for (const auto& rec : msg.authority) encode_record(out, rec);
  for (const auto& rec : msg.additional) encode_record(out, rec);
  return out;
}

DnsMessage decode_message(std::span<const std::uint8_t> buffer) {
  Reader reader(buffer);
  if (buffer.size() < kHeaderSize) throw WireFormatError("short header", buffer.size());

  DnsMessage msg;
  msg.id = reader.u16();
  msg.flags.word = reader.u16();
  std::uint16_t qdcount = reader.u16();
  std::uint16_t ancount = reader.u16();
  std::uint16_t nscount = reader.u16();
  std::uint16_t arcount = reader.u16();

  if (qdcount != 1) throw WireFormatError("unsupported question count", 4);

  msg.question.qname = reader.name();
  msg.question.qtype = reader.u16();
  msg.question.qclass = reader.u16();

  msg.answers.reserve(ancount);
  for (std::uint16_t i = 0; i < ancount; ++i) msg.answers.push_back(decode_record(reader));
  msg.authority.reserve(nscount);
  for (std::uint16_t i = 0; i < nscount; ++i) msg.authority.push_back(decode_record(reader));
  msg.additional.reserve(arcount);
  for (std::uint16_t i = 0; i < arcount; ++i) msg.additional.push_back(decode_record(reader));

  if (!reader.at_end()) throw WireFormatError("trailing bytes", reader.pos());
  return msg;
}

std::uint32_t min_ttl(const DnsMessage& msg) {
  if (msg.answers.empty()) throw std::invalid_argument("min_ttl: message has no answers");
  std::uint32_t ttl = msg.answers.front().ttl;
  for (const auto& rec : msg.answers) ttl = std::min(ttl, rec.ttl);
  return ttl;
}

std::string rdata_text(const DnsRecord& record) {
  switch (record.type) {
    case dns::kTypeA:
      if (record.rdata.size() == 4) {
        std::string out;
        for (int i = 0; i < 4; ++i) {
          if (i) out.push_back('.');
          out += std::to_string(record.rdata[i]);
        }
        return out;
      }
      break;
    case dns::kTypeAaaa:
      if (record.rdata.size() == 16) {
        std::string out;
        for (int i = 0; i < 16; i += 2) {
          if (i) out.push_back(':');
          out += to_hex({record.rdata.data() + i, 2});
        }
        return out;
      }
      break;
    case dns::kTypeCname:
    case dns::kTypeNs:
    case dns::kTypePtr: {
      Reader r(record.rdata);
      return r.name();
    }
    default:
      break;
  }
  return to_hex(record.rdata);
}

std::vector<std::uint8_t> make_header_error(std::uint16_t id, std::uint8_t rcode) {
  std::vector<std::uint8_t> out;
  DnsFlags flags;
  flags.set_qr(true);
  flags.set_rcode(rcode);
  put_u16(out, id);
  put_u16(out, flags.word);
  for (int i = 0; i < 4; ++i) put_u16(out, 0);
  return out;
}

}  // namespace kres
