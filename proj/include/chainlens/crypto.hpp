#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <string>

#include "chainlens/bytes.hpp"

namespace chainlens {

// 32-byte hash kept in internal (serialized, little-endian) byte order.
// Display form is the byte-reversed hex string, matching block explorers.
struct Hash32 {
    std::array<uint8_t, 32> bytes{};

    auto operator<=>(const Hash32&) const = default;
    bool is_zero() const {
        for (uint8_t b : bytes)
            if (b != 0) return false;
        return true;
    }

    std::string to_hex() const;                   // reversed display hex
    static Hash32 from_hex(std::string_view hex); // parses display hex
};

struct Hash32Hasher {
    size_t operator()(const Hash32& h) const {
        uint64_t v;
        std::memcpy(&v, h.bytes.data(), 8);
        return static_cast<size_t>(v);
    }
};

std::array<uint8_t, 32> sha256(ByteSpan data);
std::array<uint8_t, 20> ripemd160(ByteSpan data);

Hash32 double_sha256(ByteSpan data);
std::array<uint8_t, 20> hash160(ByteSpan data); // RIPEMD160(SHA256(data))

} // namespace chainlens
