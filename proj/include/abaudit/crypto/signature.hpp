#pragma once

#include <array>
#include <cstdint>

#include "abaudit/core/bytes.hpp"
#include "abaudit/crypto/random.hpp"

namespace abaudit::crypto {

// ECDSA over NIST P-256 with SHA-256. Nonces follow RFC 6979 so signatures
// are a deterministic function of (key, message); s is normalized to the
// lower half of the order.

// SEC1 compressed point.
class PublicKey {
public:
    static constexpr std::size_t kSize = 33;

    // Throws DecodeError if the bytes are not a valid curve point.
    static PublicKey from_bytes(ByteView bytes);

    const std::array<std::uint8_t, kSize>& bytes() const { return bytes_; }
    std::string hex() const { return to_hex(bytes_); }

    friend bool operator==(const PublicKey&, const PublicKey&) = default;
    friend auto operator<=>(const PublicKey&, const PublicKey&) = default;

private:
    std::array<std::uint8_t, kSize> bytes_{};
};

class KeyPair {
public:
    static KeyPair generate(RandomSource& rng);
    // Throws DecodeError unless 1 <= scalar < n.
    static KeyPair from_private(ByteView scalar32);

    const PublicKey& public_key() const { return public_; }
    const std::array<std::uint8_t, 32>& private_bytes() const { return private_; }

private:
    std::array<std::uint8_t, 32> private_{};
    PublicKey public_;
};

// Fixed 64-byte r || s encoding.
class Signature {
public:
    static constexpr std::size_t kSize = 64;

    // Throws DecodeError on wrong length or r, s outside [1, n-1].
    static Signature decode(ByteView bytes);

    const std::array<std::uint8_t, kSize>& bytes() const { return bytes_; }
    std::string hex() const { return to_hex(bytes_); }

    friend bool operator==(const Signature&, const Signature&) = default;

private:
    friend Signature sign(const KeyPair&, ByteView);
    std::array<std::uint8_t, kSize> bytes_{};
};

Signature sign(const KeyPair& key, ByteView message);
bool verify_sig(const PublicKey& key, ByteView message, const Signature& sig);
// Decodes first; a malformed encoding throws DecodeError rather than
// returning false.
bool verify_sig(const PublicKey& key, ByteView message, ByteView encoded_sig);

}  // namespace abaudit::crypto
