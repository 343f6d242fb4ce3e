#include <fstream>
#include <iterator>

#include <openssl/evp.h>
#include <openssl/rand.h>

#include "abaudit/core/errors.hpp"
#include "abaudit/wallet/wallet.hpp"

namespace abaudit::wallet {

namespace {

constexpr std::string_view kMagic = "ABW1";
constexpr std::uint32_t kFormatVersion = 1;
constexpr std::uint32_t kKdfIterations = 200'000;
constexpr std::size_t kSaltSize = 16;
constexpr std::size_t kNonceSize = 12;
constexpr std::size_t kTagSize = 16;

struct CipherCtxFree { void operator()(EVP_CIPHER_CTX* c) const { EVP_CIPHER_CTX_free(c); } };
using CipherCtx = std::unique_ptr<EVP_CIPHER_CTX, CipherCtxFree>;

std::array<std::uint8_t, 32> derive_key(std::string_view passphrase, ByteView salt, std::uint32_t iterations) {
    std::array<std::uint8_t, 32> key{};
    if (PKCS5_PBKDF2_HMAC(passphrase.data(), static_cast<int>(passphrase.size()), salt.data(),
                          static_cast<int>(salt.size()), static_cast<int>(iterations), EVP_sha256(),
                          static_cast<int>(key.size()), key.data()) != 1) {
        throw Error("key derivation failed");
    }
    return key;
}

void write_state(Bytes& out, const ValueSet& s) {
    put_u64(out, s.id);
    put_u64(out, static_cast<std::uint64_t>(s.created_at));
    put_var(out, s.counterparty_id);
    put_bytes(out, s.own_address.raw());
    put_u8(out, s.counterparty_address ? 1 : 0);
    if (s.counterparty_address) put_bytes(out, s.counterparty_address->raw());
    put_bytes(out, s.shared_secret);
    put_bytes(out, s.signing_key.private_bytes());
    put_u8(out, static_cast<std::uint8_t>(s.status));
}

ValueSet read_value_set(ByteReader& in) {
    ValueSet s;
    s.id = in.u64();
    s.created_at = static_cast<Timestamp>(in.u64());
    s.counterparty_id = in.var_string();
    s.own_address = crypto::Address(in.take_array<crypto::Address::kSize>());
    if (in.u8()) s.counterparty_address = crypto::Address(in.take_array<crypto::Address::kSize>());
    s.shared_secret = in.take_array<32>();
    s.signing_key = crypto::KeyPair::from_private(in.take(32));
    auto status = in.u8();
    if (status > 2) throw DecodeError("bad value set status");
    s.status = static_cast<ValueSetStatus>(status);
    if (crypto::derive_address(s.signing_key.public_key()) != s.own_address) {
        throw DecodeError("value set address does not match its key");
    }
    return s;
}

}  // namespace

Bytes Wallet::serialize() const {
    std::shared_lock lock(*mutex_);
    const auto& gp = *ctx_.group;
    Bytes out;
    put_var(out, self_);
    put_bytes(out, gp.id());
    put_u64(out, next_set_id_);
    put_u64(out, next_entry_id_);

    put_u32(out, static_cast<std::uint32_t>(sets_.size()));
    for (const auto& s : sets_) write_state(out, s);

    put_u32(out, static_cast<std::uint32_t>(journal_.size()));
    for (const auto& e : journal_) {
        put_u64(out, e.id);
        put_var(out, e.tx.counterparty_id);
        put_u8(out, static_cast<std::uint8_t>(e.tx.direction));
        put_u64(out, static_cast<std::uint64_t>(e.tx.amount));
        put_u64(out, static_cast<std::uint64_t>(e.tx.date.days_since_epoch()));
        put_var(out, e.tx.details);
    }

    put_u32(out, static_cast<std::uint32_t>(openings_.size()));
    for (const auto& [ref, o] : openings_) {
        protocol::encode(out, gp, protocol::OpeningPackage{ref, o.amount, o.amount_randomness, o.details,
                                                           o.detail_randomness});
    }

    put_u32(out, static_cast<std::uint32_t>(outbox_.size()));
    for (const auto& n : outbox_) {
        put_var(out, n.from);
        put_var(out, n.to);
        put_var(out, n.address);
        put_bytes(out, n.shared_secret);
        put_u8(out, n.in_reply_to ? 1 : 0);
        if (n.in_reply_to) put_bytes(out, n.in_reply_to->raw());
    }
    return out;
}

Wallet Wallet::deserialize(ByteView bytes, Context context) {
    ByteReader in(bytes);
    Wallet w(in.var_string(), std::move(context));
    const auto& gp = *w.ctx_.group;
    if (in.take_array<8>() != gp.id()) throw DecodeError("wallet was written under different group parameters");
    w.next_set_id_ = in.u64();
    w.next_entry_id_ = in.u64();

    for (auto n = in.u32(); n > 0; --n) w.sets_.push_back(read_value_set(in));

    for (auto n = in.u32(); n > 0; --n) {
        JournalEntry e;
        e.id = in.u64();
        e.tx.counterparty_id = in.var_string();
        e.tx.direction = protocol::direction_from_flag(in.u8());
        e.tx.amount = static_cast<std::int64_t>(in.u64());
        e.tx.date = Date::from_days(static_cast<std::int64_t>(in.u64()));
        e.tx.details = in.var_string();
        w.journal_.push_back(std::move(e));
    }

    for (auto n = in.u32(); n > 0; --n) {
        auto p = protocol::decode_opening(in, gp);
        w.openings_[p.ref] = Opening{p.amount, p.amount_randomness, p.details, p.detail_randomness};
    }

    for (auto n = in.u32(); n > 0; --n) {
        Notification note;
        note.from = in.var_string();
        note.to = in.var_string();
        note.address = in.var_string();
        note.shared_secret = in.take_array<32>();
        if (in.u8()) note.in_reply_to = crypto::Address(in.take_array<crypto::Address::kSize>());
        w.outbox_.push_back(std::move(note));
    }
    in.expect_done();
    return w;
}

// Layout: "ABW1" | u32 version | u32 kdf iterations | salt | nonce |
// AES-256-GCM ciphertext | tag. The header bytes are authenticated as AAD.
void Wallet::save(const std::filesystem::path& path, std::string_view passphrase) const {
    Bytes plain = serialize();

    Bytes header;
    put_string(header, kMagic);
    put_u32(header, kFormatVersion);
    put_u32(header, kKdfIterations);
    Bytes salt(kSaltSize), nonce(kNonceSize);
    if (RAND_bytes(salt.data(), static_cast<int>(salt.size())) != 1 ||
        RAND_bytes(nonce.data(), static_cast<int>(nonce.size())) != 1) {
        throw Error("random source failed");
    }
    put_bytes(header, salt);
    put_bytes(header, nonce);
    auto key = derive_key(passphrase, salt, kKdfIterations);

    CipherCtx ctx(EVP_CIPHER_CTX_new());
    Bytes cipher(plain.size());
    Bytes tag(kTagSize);
    int len = 0, total = 0;
    bool ok = ctx && EVP_EncryptInit_ex(ctx.get(), EVP_aes_256_gcm(), nullptr, key.data(), nonce.data()) == 1 &&
              EVP_EncryptUpdate(ctx.get(), nullptr, &len, header.data(), static_cast<int>(header.size())) == 1 &&
              EVP_EncryptUpdate(ctx.get(), cipher.data(), &len, plain.data(), static_cast<int>(plain.size())) == 1;
    total = len;
    ok = ok && EVP_EncryptFinal_ex(ctx.get(), cipher.data() + total, &len) == 1 &&
         EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_GET_TAG, static_cast<int>(tag.size()), tag.data()) == 1;
    OPENSSL_cleanse(plain.data(), plain.size());
    OPENSSL_cleanse(key.data(), key.size());
    if (!ok) throw Error("wallet encryption failed");

    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        f.write(reinterpret_cast<const char*>(header.data()), static_cast<std::streamsize>(header.size()));
        f.write(reinterpret_cast<const char*>(cipher.data()), static_cast<std::streamsize>(cipher.size()));
        f.write(reinterpret_cast<const char*>(tag.data()), static_cast<std::streamsize>(tag.size()));
        if (!f) throw Error("cannot write wallet file " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

Wallet Wallet::load(const std::filesystem::path& path, std::string_view passphrase, Context context) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw NotFoundError("cannot open wallet file " + path.string());
    Bytes data((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());

    ByteReader in(data);
    auto magic = in.take(kMagic.size());
    if (!std::equal(magic.begin(), magic.end(), kMagic.begin())) throw DecodeError("not a wallet file");
    if (in.u32() != kFormatVersion) throw DecodeError("unsupported wallet format version");
    auto iterations = in.u32();
    if (iterations == 0 || iterations > 10'000'000) throw DecodeError("bad KDF parameters");
    auto salt = in.take(kSaltSize);
    auto nonce = in.take(kNonceSize);
    const std::size_t header_size = in.position();
    if (in.remaining() < kTagSize) throw DecodeError("wallet file truncated");
    auto cipher = in.take(in.remaining() - kTagSize);
    Bytes tag = in.take_bytes(kTagSize);

    auto key = derive_key(passphrase, salt, iterations);
    CipherCtx ctx(EVP_CIPHER_CTX_new());
    Bytes plain(cipher.size());
    int len = 0;
    bool ok = ctx && EVP_DecryptInit_ex(ctx.get(), EVP_aes_256_gcm(), nullptr, key.data(), nonce.data()) == 1 &&
              EVP_DecryptUpdate(ctx.get(), nullptr, &len, data.data(), static_cast<int>(header_size)) == 1 &&
              EVP_DecryptUpdate(ctx.get(), plain.data(), &len, cipher.data(), static_cast<int>(cipher.size())) == 1 &&
              EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_TAG, static_cast<int>(tag.size()), tag.data()) == 1;
    OPENSSL_cleanse(key.data(), key.size());
    if (!ok) throw DecodeError("wallet decryption failed");
    if (EVP_DecryptFinal_ex(ctx.get(), plain.data() + len, &len) != 1) {
        throw AuthorizationError("wrong passphrase or tampered wallet file");
    }
    auto w = deserialize(plain, std::move(context));
    OPENSSL_cleanse(plain.data(), plain.size());
    return w;
}

}  // namespace abaudit::wallet
