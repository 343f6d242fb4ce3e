#include "abaudit/crypto/signature.hpp"

#include <memory>
#include <mutex>

#include <openssl/bn.h>
#include <openssl/ec.h>
#include <openssl/obj_mac.h>

#include "abaudit/core/errors.hpp"
#include "abaudit/crypto/hash.hpp"

namespace abaudit::crypto {

namespace {

struct BnFree { void operator()(BIGNUM* b) const { BN_clear_free(b); } };
struct CtxFree { void operator()(BN_CTX* c) const { BN_CTX_free(c); } };
struct PointFree { void operator()(EC_POINT* p) const { EC_POINT_free(p); } };

using Bn = std::unique_ptr<BIGNUM, BnFree>;
using BnCtx = std::unique_ptr<BN_CTX, CtxFree>;
using Point = std::unique_ptr<EC_POINT, PointFree>;

struct Curve {
    EC_GROUP* group = nullptr;
    Bn order;
    Bn half_order;
};

const Curve& curve() {
    static std::once_flag once;
    static Curve c;
    std::call_once(once, [] {
        c.group = EC_GROUP_new_by_curve_name(NID_X9_62_prime256v1);
        if (c.group == nullptr) throw Error("P-256 unavailable");
        c.order.reset(BN_dup(EC_GROUP_get0_order(c.group)));
        c.half_order.reset(BN_new());
        BN_rshift1(c.half_order.get(), c.order.get());
    });
    return c;
}

Bn new_bn() {
    Bn b(BN_new());
    if (!b) throw Error("BN allocation failed");
    return b;
}

Bn bn_from(ByteView bytes) {
    Bn b(BN_bin2bn(bytes.data(), static_cast<int>(bytes.size()), nullptr));
    if (!b) throw Error("BN conversion failed");
    return b;
}

std::array<std::uint8_t, 32> bn_to32(const BIGNUM* b) {
    std::array<std::uint8_t, 32> out{};
    if (BN_bn2binpad(b, out.data(), static_cast<int>(out.size())) != 32) throw Error("BN too wide");
    return out;
}

bool in_scalar_range(const BIGNUM* x) {
    return !BN_is_zero(x) && !BN_is_negative(x) && BN_cmp(x, curve().order.get()) < 0;
}

// SHA-256 output is exactly as wide as the P-256 order, so bits2int is the
// identity and bits2octets is a single conditional subtraction.
Bn digest_scalar(const Digest& d) {
    Bn z = bn_from(d);
    if (BN_cmp(z.get(), curve().order.get()) >= 0) BN_sub(z.get(), z.get(), curve().order.get());
    return z;
}

// RFC 6979 section 3.2 with HMAC-SHA-256.
class NonceGenerator {
public:
    NonceGenerator(const std::array<std::uint8_t, 32>& priv, const std::array<std::uint8_t, 32>& h1) {
        v_.fill(0x01);
        k_.fill(0x00);
        step(0x00, priv, h1);
        v_ = hmac_sha256(k_, v_);
        step(0x01, priv, h1);
        v_ = hmac_sha256(k_, v_);
    }

    Bn next() {
        for (;;) {
            v_ = hmac_sha256(k_, v_);
            Bn k = bn_from(v_);
            bool ok = in_scalar_range(k.get());
            // Advance so a rejected (r, s) can draw the following candidate.
            reseed();
            if (ok) return k;
        }
    }

private:
    void step(std::uint8_t tag, const std::array<std::uint8_t, 32>& priv,
              const std::array<std::uint8_t, 32>& h1) {
        Bytes in(v_.begin(), v_.end());
        in.push_back(tag);
        put_bytes(in, priv);
        put_bytes(in, h1);
        k_ = hmac_sha256(k_, in);
    }

    void reseed() {
        Bytes in(v_.begin(), v_.end());
        in.push_back(0x00);
        k_ = hmac_sha256(k_, in);
        v_ = hmac_sha256(k_, v_);
    }

    Digest v_{};
    Digest k_{};
};

PublicKey encode_point(const EC_POINT* point, BN_CTX* ctx) {
    std::array<std::uint8_t, PublicKey::kSize> buf{};
    auto n = EC_POINT_point2oct(curve().group, point, POINT_CONVERSION_COMPRESSED, buf.data(),
                                buf.size(), ctx);
    if (n != buf.size()) throw Error("point encoding failed");
    return PublicKey::from_bytes(buf);
}

Point decode_point(const PublicKey& key, BN_CTX* ctx) {
    Point p(EC_POINT_new(curve().group));
    if (!p || EC_POINT_oct2point(curve().group, p.get(), key.bytes().data(), key.bytes().size(),
                                 ctx) != 1) {
        throw DecodeError("invalid public key encoding");
    }
    return p;
}

}  // namespace

PublicKey PublicKey::from_bytes(ByteView bytes) {
    if (bytes.size() != kSize || (bytes[0] != 0x02 && bytes[0] != 0x03)) {
        throw DecodeError("public key must be a 33-byte compressed point");
    }
    BnCtx ctx(BN_CTX_new());
    Point p(EC_POINT_new(curve().group));
    if (!p || EC_POINT_oct2point(curve().group, p.get(), bytes.data(), bytes.size(), ctx.get()) != 1 ||
        EC_POINT_is_on_curve(curve().group, p.get(), ctx.get()) != 1) {
        throw DecodeError("public key is not a curve point");
    }
    PublicKey key;
    std::copy(bytes.begin(), bytes.end(), key.bytes_.begin());
    return key;
}

KeyPair KeyPair::generate(RandomSource& rng) {
    for (;;) {
        std::array<std::uint8_t, 32> candidate{};
        rng.fill(candidate);
        Bn x = bn_from(candidate);
        if (in_scalar_range(x.get())) return from_private(candidate);
    }
}

KeyPair KeyPair::from_private(ByteView scalar32) {
    if (scalar32.size() != 32) throw DecodeError("private key must be 32 bytes");
    Bn x = bn_from(scalar32);
    if (!in_scalar_range(x.get())) throw DecodeError("private key outside [1, n-1]");
    BnCtx ctx(BN_CTX_new());
    Point pub(EC_POINT_new(curve().group));
    if (!pub || EC_POINT_mul(curve().group, pub.get(), x.get(), nullptr, nullptr, ctx.get()) != 1) {
        throw Error("public key derivation failed");
    }
    KeyPair kp;
    std::copy(scalar32.begin(), scalar32.end(), kp.private_.begin());
    kp.public_ = encode_point(pub.get(), ctx.get());
    return kp;
}

Signature Signature::decode(ByteView bytes) {
    if (bytes.size() != kSize) throw DecodeError("signature must be 64 bytes");
    Bn r = bn_from(bytes.first(32));
    Bn s = bn_from(bytes.subspan(32));
    if (!in_scalar_range(r.get()) || !in_scalar_range(s.get())) {
        throw DecodeError("signature component outside [1, n-1]");
    }
    Signature sig;
    std::copy(bytes.begin(), bytes.end(), sig.bytes_.begin());
    return sig;
}

Signature sign(const KeyPair& key, ByteView message) {
    const auto& c = curve();
    BnCtx ctx(BN_CTX_new());
    const Digest h1 = sha256(message);
    Bn z = digest_scalar(h1);
    Bn x = bn_from(key.private_bytes());
    NonceGenerator nonces(key.private_bytes(), bn_to32(z.get()));

    Point rp(EC_POINT_new(c.group));
    Bn rx = new_bn(), r = new_bn(), s = new_bn(), kinv = new_bn(), tmp = new_bn();
    for (;;) {
        Bn k = nonces.next();
        if (EC_POINT_mul(c.group, rp.get(), k.get(), nullptr, nullptr, ctx.get()) != 1 ||
            EC_POINT_get_affine_coordinates(c.group, rp.get(), rx.get(), nullptr, ctx.get()) != 1) {
            throw Error("nonce point computation failed");
        }
        BN_nnmod(r.get(), rx.get(), c.order.get(), ctx.get());
        if (BN_is_zero(r.get())) continue;
        // s = k^-1 (z + r x) mod n
        BN_mod_inverse(kinv.get(), k.get(), c.order.get(), ctx.get());
        BN_mod_mul(tmp.get(), r.get(), x.get(), c.order.get(), ctx.get());
        BN_mod_add(tmp.get(), tmp.get(), z.get(), c.order.get(), ctx.get());
        BN_mod_mul(s.get(), kinv.get(), tmp.get(), c.order.get(), ctx.get());
        if (BN_is_zero(s.get())) continue;
        if (BN_cmp(s.get(), c.half_order.get()) > 0) BN_sub(s.get(), c.order.get(), s.get());
        break;
    }
    Signature sig;
    auto rb = bn_to32(r.get());
    auto sb = bn_to32(s.get());
    std::copy(rb.begin(), rb.end(), sig.bytes_.begin());
    std::copy(sb.begin(), sb.end(), sig.bytes_.begin() + 32);
    return sig;
}

bool verify_sig(const PublicKey& key, ByteView message, const Signature& sig) {
    const auto& c = curve();
    BnCtx ctx(BN_CTX_new());
    Point q = decode_point(key, ctx.get());
    ByteView raw(sig.bytes());
    Bn r = bn_from(raw.first(32));
    Bn s = bn_from(raw.subspan(32));
    if (!in_scalar_range(r.get()) || !in_scalar_range(s.get())) return false;

    Bn z = digest_scalar(sha256(message));
    Bn w = new_bn(), u1 = new_bn(), u2 = new_bn(), x = new_bn(), v = new_bn();
    if (BN_mod_inverse(w.get(), s.get(), c.order.get(), ctx.get()) == nullptr) return false;
    BN_mod_mul(u1.get(), z.get(), w.get(), c.order.get(), ctx.get());
    BN_mod_mul(u2.get(), r.get(), w.get(), c.order.get(), ctx.get());

    Point point(EC_POINT_new(c.group));
    if (EC_POINT_mul(c.group, point.get(), u1.get(), q.get(), u2.get(), ctx.get()) != 1) return false;
    if (EC_POINT_is_at_infinity(c.group, point.get()) == 1) return false;
    if (EC_POINT_get_affine_coordinates(c.group, point.get(), x.get(), nullptr, ctx.get()) != 1) {
        return false;
    }
    BN_nnmod(v.get(), x.get(), c.order.get(), ctx.get());
    return BN_cmp(v.get(), r.get()) == 0;
}

bool verify_sig(const PublicKey& key, ByteView message, ByteView encoded_sig) {
    return verify_sig(key, message, Signature::decode(encoded_sig));
}

}  // namespace abaudit::crypto
