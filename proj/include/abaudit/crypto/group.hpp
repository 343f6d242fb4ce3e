#pragma once

#include <array>
#include <cstdint>
#include <string_view>

#include <gmpxx.h>

#include "abaudit/core/bytes.hpp"
#include "abaudit/core/date.hpp"
#include "abaudit/crypto/hash.hpp"

namespace abaudit::crypto {

enum class SecurityLevel { test, production };

std::string_view to_string(SecurityLevel level);
// Accepts "test" or "production"; throws ParameterError otherwise.
SecurityLevel parse_security_level(std::string_view text);

// Label from which the second Pedersen generator is derived.
inline constexpr std::string_view kPedersenHLabel = "FutureAB-h";

// Short fingerprint of (p, q, g, h), carried by every commitment so values
// from different groups cannot be mixed.
using GroupId = std::array<std::uint8_t, 8>;

// Order-q subgroup of Z_p^* with two generators g, h of order q. Nobody
// knows log_g(h): h is hashed into the group from a public label.
class GroupParams {
public:
    // Validates primality, q | p-1 and generator orders; throws
    // ParameterError on any failure. h is derived from `h_label`.
    GroupParams(mpz_class p, mpz_class q, mpz_class g, std::string_view h_label,
                SecurityLevel level);

    const mpz_class& modulus() const { return p_; }
    const mpz_class& order() const { return q_; }
    const mpz_class& g() const { return g_; }
    const mpz_class& h() const { return h_; }
    SecurityLevel level() const { return level_; }
    const GroupId& id() const { return id_; }

    std::size_t element_bytes() const { return element_bytes_; }
    std::size_t scalar_bytes() const { return scalar_bytes_; }

    // 1 <= x < p and x^q = 1.
    bool contains(const mpz_class& x) const;

    friend bool operator==(const GroupParams& a, const GroupParams& b) { return a.id_ == b.id_; }

private:
    mpz_class p_, q_, g_, h_;
    SecurityLevel level_;
    GroupId id_{};
    std::size_t element_bytes_ = 0;
    std::size_t scalar_bytes_ = 0;
};

// test: 63-bit safe-prime group (oracle-checkable with 128-bit arithmetic).
// production: 2048-bit p with a 256-bit prime-order subgroup.
// Both are built once and cached; the returned reference is immutable.
const GroupParams& setup_group(SecurityLevel level);

// Hash-to-group: expand label||counter to |p|+128 bits, reduce mod p, raise
// to the cofactor; the first result other than 1 and `avoid` wins.
mpz_class hash_to_group(const mpz_class& p, const mpz_class& q, std::string_view label,
                        const mpz_class& avoid = 1);

// Integer modulo q. The constructor does not reduce; operations that
// require [0, q) check and throw RangeError.
struct Scalar {
    mpz_class value;

    Scalar() = default;
    explicit Scalar(mpz_class v) : value(std::move(v)) {}
    static Scalar from_u64(std::uint64_t v);

    Bytes to_bytes(const GroupParams& params) const;
    static Scalar from_bytes(const GroupParams& params, ByteView bytes);

    friend bool operator==(const Scalar& a, const Scalar& b) { return a.value == b.value; }
};

Scalar add(const GroupParams& params, const Scalar& a, const Scalar& b);

// Reduce a wide digest stream to a scalar with negligible bias.
Scalar hash_to_scalar(const GroupParams& params, std::string_view domain, ByteView data);

struct Commitment {
    GroupId group{};
    mpz_class element;

    // Fixed-width big-endian, element_bytes() long.
    Bytes to_bytes(const GroupParams& params) const;
    // Throws DecodeError on wrong width or a value outside the subgroup.
    static Commitment from_bytes(const GroupParams& params, ByteView bytes);

    friend bool operator==(const Commitment& a, const Commitment& b) {
        return a.group == b.group && a.element == b.element;
    }
};

// g^v * h^r mod p. Throws RangeError unless 0 <= v, r < q.
Commitment commit(const GroupParams& params, const Scalar& v, const Scalar& r);

// c1 * c2 mod p. Throws ParameterError if either input belongs to a
// different group than `params`.
Commitment combine(const GroupParams& params, const Commitment& c1, const Commitment& c2);

// True iff c == commit(v mod q, r mod q). Never throws on bad inputs.
bool verify_opening(const GroupParams& params, const Commitment& c, const mpz_class& v,
                    const mpz_class& r);

using CommitmentSecret = std::array<std::uint8_t, 32>;

// Commitment randomness both counterparties derive from their shared secret.
// Index 0 is the daily amount aggregate; index 1 the detail digest.
Scalar derive_randomness(const GroupParams& params, const CommitmentSecret& secret,
                         const Date& date, std::uint32_t index);

inline constexpr std::uint32_t kAmountSlot = 0;
inline constexpr std::uint32_t kDetailSlot = 1;

}  // namespace abaudit::crypto
