#include "abaudit/crypto/hash.hpp"

#include <openssl/evp.h>
#include <openssl/hmac.h>

#include "abaudit/core/errors.hpp"

namespace abaudit::crypto {

struct Sha256::Ctx {
    EVP_MD_CTX* md = nullptr;
};

Sha256::Sha256() : ctx_(std::make_unique<Ctx>()) {
    ctx_->md = EVP_MD_CTX_new();
    if (ctx_->md == nullptr || EVP_DigestInit_ex(ctx_->md, EVP_sha256(), nullptr) != 1) {
        EVP_MD_CTX_free(ctx_->md);
        throw Error("SHA-256 initialisation failed");
    }
}

Sha256::~Sha256() { EVP_MD_CTX_free(ctx_->md); }

Sha256& Sha256::update(ByteView data) {
    if (EVP_DigestUpdate(ctx_->md, data.data(), data.size()) != 1) throw Error("SHA-256 update failed");
    return *this;
}

Digest Sha256::finish() {
    Digest out{};
    unsigned int len = 0;
    if (EVP_DigestFinal_ex(ctx_->md, out.data(), &len) != 1 || len != out.size()) {
        throw Error("SHA-256 finalisation failed");
    }
    return out;
}

Digest sha256(ByteView data) {
    Digest out{};
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), out.data(), &len, EVP_sha256(), nullptr) != 1) {
        throw Error("SHA-256 failed");
    }
    return out;
}

Digest hmac_sha256(ByteView key, ByteView data) {
    Digest out{};
    unsigned int len = 0;
    if (HMAC(EVP_sha256(), key.data(), static_cast<int>(key.size()), data.data(), data.size(),
             out.data(), &len) == nullptr) {
        throw Error("HMAC-SHA-256 failed");
    }
    return out;
}

Digest tagged_hash(std::string_view domain, ByteView data) {
    Bytes prefix;
    put_var(prefix, domain);
    Sha256 h;
    h.update(prefix).update(data);
    return h.finish();
}

}  // namespace abaudit::crypto
