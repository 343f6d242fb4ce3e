#pragma once

#include <cstdint>
#include <span>

#include "abaudit/crypto/hash.hpp"

namespace abaudit::crypto {

class RandomSource {
public:
    virtual ~RandomSource() = default;
    virtual void fill(std::span<std::uint8_t> out) = 0;

    std::uint64_t next_u64();
    // Uniform in [0, bound) by rejection; bound must be > 0.
    std::uint64_t uniform(std::uint64_t bound);
    // Uniform in [0, 1).
    double unit();
};

// Operating-system entropy via OpenSSL's CSPRNG.
class SystemRandom final : public RandomSource {
public:
    void fill(std::span<std::uint8_t> out) override;
};

// Reproducible stream: SHA-256 in counter mode over a seed. Used by the
// simulator and tests; never for real key material.
class SeededRandom final : public RandomSource {
public:
    explicit SeededRandom(std::uint64_t seed);
    void fill(std::span<std::uint8_t> out) override;

private:
    Digest key_{};
    std::uint64_t counter_ = 0;
    Digest block_{};
    std::size_t used_ = sizeof(Digest);
};

}  // namespace abaudit::crypto
