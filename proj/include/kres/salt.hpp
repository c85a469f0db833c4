#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>

namespace kres {

// Per-user secret mixed into every bucket hash. 16 bytes, persisted as
// 32 hex characters. Never regenerated implicitly: replacing the salt
// reassigns every domain to a new recursor.
struct Salt {
  std::array<std::uint8_t, 16> bytes{};

  std::string to_hex() const;
  static std::optional<Salt> from_hex(std::string_view hex);

  bool operator==(const Salt&) const = default;
};

using EntropySource = std::function<void(std::span<std::uint8_t>)>;

// Fills a fresh salt from a cryptographically strong source (OpenSSL RAND
// by default). Throws std::runtime_error if the entropy source fails.
Salt generate_salt(const EntropySource& fill = {});

}  // namespace kres
