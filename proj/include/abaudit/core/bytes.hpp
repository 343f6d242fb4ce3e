#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace abaudit {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

std::string to_hex(ByteView data);
// Throws DecodeError on odd length or non-hex characters.
Bytes from_hex(std::string_view hex);

inline ByteView as_bytes(std::string_view s) {
    return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

template <std::size_t N>
ByteView as_bytes(const std::array<std::uint8_t, N>& a) {
    return {a.data(), a.size()};
}

// Big-endian append helpers used by every canonical encoding.
void put_u8(Bytes& out, std::uint8_t v);
void put_u32(Bytes& out, std::uint32_t v);
void put_u64(Bytes& out, std::uint64_t v);
void put_bytes(Bytes& out, ByteView v);
void put_string(Bytes& out, std::string_view v);
// u32 length prefix followed by the raw bytes.
void put_var(Bytes& out, ByteView v);
void put_var(Bytes& out, std::string_view v);

// Sequential reader over a byte buffer; every read past the end throws
// DecodeError.
class ByteReader {
public:
    explicit ByteReader(ByteView data) : data_(data) {}

    std::uint8_t u8();
    std::uint32_t u32();
    std::uint64_t u64();
    ByteView take(std::size_t n);
    Bytes take_bytes(std::size_t n);
    template <std::size_t N>
    std::array<std::uint8_t, N> take_array() {
        auto v = take(N);
        std::array<std::uint8_t, N> out{};
        std::copy(v.begin(), v.end(), out.begin());
        return out;
    }
    // u32 length prefix, then the payload. `limit` bounds the prefix.
    ByteView var(std::size_t limit = 1u << 28);
    std::string var_string(std::size_t limit = 1u << 20);

    std::size_t remaining() const { return data_.size() - pos_; }
    std::size_t position() const { return pos_; }
    bool done() const { return pos_ == data_.size(); }
    // Throws DecodeError unless the whole buffer was consumed.
    void expect_done() const;

private:
    ByteView data_;
    std::size_t pos_ = 0;
};

}  // namespace abaudit
