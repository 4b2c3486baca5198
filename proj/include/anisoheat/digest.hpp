#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>

namespace anisoheat {

using Sha256 = std::array<std::uint8_t, 32>;

Sha256 sha256(std::span<const std::uint8_t> bytes);
std::string hex(std::span<const std::uint8_t> bytes);
std::string sha256_hex(std::string_view text);
/// Throws IoFailure when the file cannot be read.
std::string sha256_file(const std::filesystem::path& path);

}  // namespace anisoheat
