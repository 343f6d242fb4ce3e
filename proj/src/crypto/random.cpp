#include "abaudit/crypto/random.hpp"

#include <algorithm>

#include <openssl/rand.h>

#include "abaudit/core/errors.hpp"

namespace abaudit::crypto {

std::uint64_t RandomSource::next_u64() {
    std::array<std::uint8_t, 8> buf{};
    fill(buf);
    std::uint64_t v = 0;
    for (auto b : buf) v = (v << 8) | b;
    return v;
}

std::uint64_t RandomSource::uniform(std::uint64_t bound) {
    if (bound == 0) throw ParameterError("uniform bound must be positive");
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    for (;;) {
        auto v = next_u64();
        if (v < limit) return v % bound;
    }
}

double RandomSource::unit() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

void SystemRandom::fill(std::span<std::uint8_t> out) {
    if (RAND_bytes(out.data(), static_cast<int>(out.size())) != 1) {
        throw Error("system random source failed");
    }
}

SeededRandom::SeededRandom(std::uint64_t seed) {
    Bytes s;
    put_u64(s, seed);
    key_ = tagged_hash("abaudit/seeded-random/v1", s);
}

void SeededRandom::fill(std::span<std::uint8_t> out) {
    std::size_t written = 0;
    while (written < out.size()) {
        if (used_ == block_.size()) {
            Bytes in(key_.begin(), key_.end());
            put_u64(in, counter_++);
            block_ = sha256(in);
            used_ = 0;
        }
        auto n = std::min(out.size() - written, block_.size() - used_);
        std::copy_n(block_.begin() + static_cast<std::ptrdiff_t>(used_), n,
                    out.begin() + static_cast<std::ptrdiff_t>(written));
        used_ += n;
        written += n;
    }
}

}  // namespace abaudit::crypto
