#pragma once

#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "chainlens/errors.hpp"

namespace chainlens {

using Bytes = std::vector<uint8_t>;
using ByteSpan = std::span<const uint8_t>;

std::string hex_encode(ByteSpan data);
Bytes hex_decode(std::string_view hex); // throws SchemaError on odd length / bad digit

// Cursor over a byte span. All reads are little-endian and bounds-checked;
// an overrun throws the error code the reader was constructed with.
class ByteReader {
public:
    ByteReader(ByteSpan data, Errc overflow_code) : data_(data), overflow_(overflow_code) {}

    size_t pos() const { return pos_; }
    size_t remaining() const { return data_.size() - pos_; }
    bool empty() const { return pos_ == data_.size(); }

    uint8_t u8() { return take(1)[0]; }
    uint16_t u16() { return read_le<uint16_t>(); }
    uint32_t u32() { return read_le<uint32_t>(); }
    uint64_t u64() { return read_le<uint64_t>(); }
    int32_t i32() { return static_cast<int32_t>(u32()); }
    int64_t i64() { return static_cast<int64_t>(u64()); }

    ByteSpan take(size_t n) {
        if (n > remaining()) raise(overflow_, "read past end of input at offset " + std::to_string(pos_));
        ByteSpan out = data_.subspan(pos_, n);
        pos_ += n;
        return out;
    }

    void skip(size_t n) { take(n); }

private:
    template <typename T>
    T read_le() {
        ByteSpan b = take(sizeof(T));
        T v{};
        std::memcpy(&v, b.data(), sizeof(T)); // host is little-endian on all supported targets
        return v;
    }

    ByteSpan data_;
    size_t pos_ = 0;
    Errc overflow_;
};

// Append-only little-endian encoder backed by a growing buffer.
class ByteWriter {
public:
    void u8(uint8_t v) { buf_.push_back(v); }
    void u16(uint16_t v) { write_le(v); }
    void u32(uint32_t v) { write_le(v); }
    void u64(uint64_t v) { write_le(v); }
    void i32(int32_t v) { write_le(static_cast<uint32_t>(v)); }
    void i64(int64_t v) { write_le(static_cast<uint64_t>(v)); }
    void bytes(ByteSpan data) { buf_.insert(buf_.end(), data.begin(), data.end()); }

    const Bytes& data() const { return buf_; }
    Bytes take() { return std::move(buf_); }
    size_t size() const { return buf_.size(); }

private:
    template <typename T>
    void write_le(T v) {
        uint8_t tmp[sizeof(T)];
        std::memcpy(tmp, &v, sizeof(T));
        buf_.insert(buf_.end(), tmp, tmp + sizeof(T));
    }

    Bytes buf_;
};

} // namespace chainlens
