#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

#include "abaudit/crypto/signature.hpp"

namespace abaudit::crypto {

// 20-byte digest of a public key, rendered "ab1" + 40 lowercase hex digits.
class Address {
public:
    static constexpr std::size_t kSize = 20;
    static constexpr std::string_view kPrefix = "ab1";
    static constexpr std::size_t kTextSize = 43;

    Address() = default;
    explicit Address(const std::array<std::uint8_t, kSize>& raw) : raw_(raw) {}

    // Throws ValidationError unless text matches ^ab1[0-9a-f]{40}$.
    static Address parse(std::string_view text);
    static bool is_well_formed(std::string_view text);

    std::string str() const;
    const std::array<std::uint8_t, kSize>& raw() const { return raw_; }

    friend bool operator==(const Address&, const Address&) = default;
    friend auto operator<=>(const Address&, const Address&) = default;

private:
    std::array<std::uint8_t, kSize> raw_{};
};

Address derive_address(const PublicKey& key);

struct AddressHash {
    std::size_t operator()(const Address& a) const noexcept;
};

}  // namespace abaudit::crypto
