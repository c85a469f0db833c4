#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace kres {

std::array<std::uint8_t, 32> sha256(std::span<const std::uint8_t> data);

std::string to_hex(std::span<const std::uint8_t> bytes);

// Accepts only an even-length string of hex digits; nullopt otherwise.
std::optional<std::vector<std::uint8_t>> from_hex(std::string_view hex);

}  // namespace kres
