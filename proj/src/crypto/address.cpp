#include "abaudit/crypto/address.hpp"

#include <cstring>

#include "abaudit/core/errors.hpp"
#include "abaudit/crypto/hash.hpp"

namespace abaudit::crypto {

bool Address::is_well_formed(std::string_view text) {
    if (text.size() != kTextSize || text.substr(0, kPrefix.size()) != kPrefix) return false;
    for (char c : text.substr(kPrefix.size())) {
        bool hex = (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f');
        if (!hex) return false;
    }
    return true;
}

Address Address::parse(std::string_view text) {
    if (!is_well_formed(text)) throw ValidationError("malformed address: " + std::string(text));
    auto raw = from_hex(text.substr(kPrefix.size()));
    std::array<std::uint8_t, kSize> a{};
    std::copy(raw.begin(), raw.end(), a.begin());
    return Address(a);
}

std::string Address::str() const { return std::string(kPrefix) + to_hex(raw_); }

Address derive_address(const PublicKey& key) {
    auto d = tagged_hash("abaudit/address/v1", key.bytes());
    std::array<std::uint8_t, Address::kSize> raw{};
    std::copy_n(d.begin(), raw.size(), raw.begin());
    return Address(raw);
}

std::size_t AddressHash::operator()(const Address& a) const noexcept {
    std::size_t h = 0;
    std::memcpy(&h, a.raw().data(), sizeof h);
    return h;
}

}  // namespace abaudit::crypto
