#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <string_view>

#include "abaudit/core/bytes.hpp"

namespace abaudit::crypto {

using Digest = std::array<std::uint8_t, 32>;

Digest sha256(ByteView data);
Digest hmac_sha256(ByteView key, ByteView data);

// Incremental SHA-256 over an OpenSSL digest context.
class Sha256 {
public:
    Sha256();
    ~Sha256();
    Sha256(const Sha256&) = delete;
    Sha256& operator=(const Sha256&) = delete;

    Sha256& update(ByteView data);
    Sha256& update(std::string_view data) { return update(as_bytes(data)); }
    Digest finish();

private:
    struct Ctx;
    std::unique_ptr<Ctx> ctx_;
};

// Domain-separated hash: SHA-256(u32 len(domain) || domain || data).
Digest tagged_hash(std::string_view domain, ByteView data);

}  // namespace abaudit::crypto
