#include "abaudit/core/bytes.hpp"

#include <algorithm>

#include "abaudit/core/errors.hpp"

namespace abaudit {

namespace {

int hex_value(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

}  // namespace

std::string to_hex(ByteView data) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string out;
    out.reserve(data.size() * 2);
    for (auto b : data) {
        out.push_back(digits[b >> 4]);
        out.push_back(digits[b & 0x0f]);
    }
    return out;
}

Bytes from_hex(std::string_view hex) {
    if (hex.size() % 2 != 0) throw DecodeError("hex string has odd length");
    Bytes out;
    out.reserve(hex.size() / 2);
    for (std::size_t i = 0; i < hex.size(); i += 2) {
        int hi = hex_value(hex[i]);
        int lo = hex_value(hex[i + 1]);
        if (hi < 0 || lo < 0) throw DecodeError("invalid hex character");
        out.push_back(static_cast<std::uint8_t>((hi << 4) | lo));
    }
    return out;
}

void put_u8(Bytes& out, std::uint8_t v) { out.push_back(v); }

void put_u32(Bytes& out, std::uint32_t v) {
    for (int shift = 24; shift >= 0; shift -= 8) out.push_back(static_cast<std::uint8_t>(v >> shift));
}

void put_u64(Bytes& out, std::uint64_t v) {
    for (int shift = 56; shift >= 0; shift -= 8) out.push_back(static_cast<std::uint8_t>(v >> shift));
}

void put_bytes(Bytes& out, ByteView v) { out.insert(out.end(), v.begin(), v.end()); }

void put_string(Bytes& out, std::string_view v) { put_bytes(out, as_bytes(v)); }

void put_var(Bytes& out, ByteView v) {
    put_u32(out, static_cast<std::uint32_t>(v.size()));
    put_bytes(out, v);
}

void put_var(Bytes& out, std::string_view v) { put_var(out, as_bytes(v)); }

std::uint8_t ByteReader::u8() { return take(1)[0]; }

std::uint32_t ByteReader::u32() {
    auto v = take(4);
    std::uint32_t out = 0;
    for (auto b : v) out = (out << 8) | b;
    return out;
}

std::uint64_t ByteReader::u64() {
    auto v = take(8);
    std::uint64_t out = 0;
    for (auto b : v) out = (out << 8) | b;
    return out;
}

ByteView ByteReader::take(std::size_t n) {
    if (n > remaining()) throw DecodeError("truncated input");
    auto out = data_.subspan(pos_, n);
    pos_ += n;
    return out;
}

Bytes ByteReader::take_bytes(std::size_t n) {
    auto v = take(n);
    return Bytes(v.begin(), v.end());
}

ByteView ByteReader::var(std::size_t limit) {
    auto n = u32();
    if (n > limit) throw DecodeError("length prefix exceeds limit");
    return take(n);
}

std::string ByteReader::var_string(std::size_t limit) {
    auto v = var(limit);
    return std::string(v.begin(), v.end());
}

void ByteReader::expect_done() const {
    if (!done()) throw DecodeError("trailing bytes after record");
}

}  // namespace abaudit
