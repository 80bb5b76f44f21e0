#pragma once

#include <cstdint>
#include <span>

namespace inertia {

// zlib CRC-32; `seed` continues a running checksum.
std::uint32_t crc32(std::span<const std::uint8_t> bytes, std::uint32_t seed = 0);

}  // namespace inertia
