#include "kres/salt.hpp"

#include <openssl/rand.h>

#include <stdexcept>

#include "kres/hashing.hpp"

namespace kres {

std::string Salt::to_hex() const { return kres::to_hex(bytes); }

std::optional<Salt> Salt::from_hex(std::string_view hex) {
  if (hex.size() != 32) return std::nullopt;
  auto raw = kres::from_hex(hex);
  if (!raw) return std::nullopt;
  Salt salt;
  std::copy(raw->begin(), raw->end(), salt.bytes.begin());
  return salt;
}

Salt generate_salt(const EntropySource& fill) {
  Salt salt;
  if (fill) {
    fill(salt.bytes);
  } else if (RAND_bytes(salt.bytes.data(), static_cast<int>(salt.bytes.size())) != 1) {
    throw std::runtime_error("generate_salt: entropy source unavailable");
  }
  return salt;
}

}  // namespace kres
