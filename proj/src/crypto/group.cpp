#include "abaudit/crypto/group.hpp"

#include <mutex>

#include "abaudit/core/errors.hpp"

namespace abaudit::crypto {

namespace {

// 2048-bit modulus with a 256-bit prime-order subgroup (FIPS 186 style
// domain parameters generated for this project).
constexpr const char* kProductionP =
    "cfea6adab53c898ee58b52ac015b03fdc06d01dd2400f959d3e50a1ad899105e510f6e4d6a36680dea1506a272"
    "a0a4e81772edba6db4868cb42fa58a93264d6cd320786ae51266cbd0de0a7edd36d506d34bf7e159c22a758584"
    "cdafba9abc76cf407695d9702d1db9edb12d18134680f5529f45bf6bafc3f15c5903c03ed547d469650319a4d2"
    "98c9a3e0ad0d93710042642144df4b2ed06f95930e3247dd93bf5b4e49cca5a524f0c88fdb1ec0194af01b3109"
    "46d634731e596e8167f4f70dd0b2a124acd2d19b669261b4c35615a24192262d7ee8de0e80d38adc82b9ab6686"
    "623e1c9e466b0720c92a75b7af12c183ad3852aa1102178fad8679fff3f027";
constexpr const char* kProductionQ =
    "de5ef12f248ffc8c213376b30ca7d7dc1d4a298793964891939b1f5ae8d1ca37";
constexpr const char* kProductionG =
    "8544abec6e2c3ef2a10ae90564ca5425e25ad3e194092eba5a462142c879a936754a029d8e3767b5fe51ff6da2"
    "e73ed22d491b7627d4acaf48db2ed3cf41a49d86bf89cfe9785697d378e7a19be1b7bdbc7210ae74a014b74a5a"
    "ac06bb06dc8b49a1f2ac35c235dc07bbf1c2f8ea14ef8d9ddf9a7843abdbefd774b0dac84d2f2bd3a2dd23d095"
    "c256729fbf2236e7f1ca6b8985f0e3037b8a27b0359f4dd0fb09ac32991f24fbaee6fe10cf95b4ff520b6d0916"
    "625a4d7a7e170284522f478adb2d9108f872f0a35fa4e04c1c62716a584ee0670832b1773c4a9237f2784316b0"
    "bdce28ef6a9073454fa3fa6cfea139dc987913a622df8ae14037b1ee3ff0a0";

// Safe prime p = 2q + 1; 4 is a quadratic residue and therefore has order q.
constexpr const char* kTestP = "6917529027641083883";
constexpr const char* kTestQ = "3458764513820541941";
constexpr const char* kTestG = "4";

std::size_t byte_length(const mpz_class& x) { return (mpz_sizeinbase(x.get_mpz_t(), 2) + 7) / 8; }

Bytes export_fixed(const mpz_class& x, std::size_t width) {
    Bytes out(width, 0);
    std::size_t count = 0;
    if (x > 0) {
        if (byte_length(x) > width) throw RangeError("integer too wide for encoding");
        Bytes tmp(byte_length(x));
        mpz_export(tmp.data(), &count, 1, 1, 1, 0, x.get_mpz_t());
        std::copy(tmp.begin(), tmp.begin() + static_cast<std::ptrdiff_t>(count),
                  out.end() - static_cast<std::ptrdiff_t>(count));
    }
    return out;
}

mpz_class import_bytes(ByteView bytes) {
    mpz_class x;
    if (!bytes.empty()) mpz_import(x.get_mpz_t(), bytes.size(), 1, 1, 1, 0, bytes.data());
    return x;
}

mpz_class powm(const mpz_class& base, const mpz_class& exp, const mpz_class& mod) {
    mpz_class out;
    mpz_powm(out.get_mpz_t(), base.get_mpz_t(), exp.get_mpz_t(), mod.get_mpz_t());
    return out;
}

void check_scalar(const GroupParams& params, const Scalar& s, const char* what) {
    if (s.value < 0 || s.value >= params.order()) {
        throw RangeError(std::string(what) + " scalar outside [0, q)");
    }
}

}  // namespace

std::string_view to_string(SecurityLevel level) {
    return level == SecurityLevel::test ? "test" : "production";
}

SecurityLevel parse_security_level(std::string_view text) {
    if (text == "test") return SecurityLevel::test;
    if (text == "production") return SecurityLevel::production;
    throw ParameterError("unknown group profile: " + std::string(text));
}

mpz_class hash_to_group(const mpz_class& p, const mpz_class& q, std::string_view label,
                        const mpz_class& avoid) {
    const mpz_class cofactor = (p - 1) / q;
    const std::size_t wide = byte_length(p) + 16;
    for (std::uint32_t counter = 0;; ++counter) {
        Bytes stream;
        for (std::uint32_t block = 0; stream.size() < wide; ++block) {
            Bytes in;
            put_var(in, label);
            put_u32(in, counter);
            put_u32(in, block);
            auto d = tagged_hash("abaudit/hash-to-group/v1", in);
            put_bytes(stream, d);
        }
        stream.resize(wide);
        mpz_class x = import_bytes(stream) % p;
        mpz_class h = powm(x, cofactor, p);
        if (h > 1 && h != avoid) return h;
    }
}

GroupParams::GroupParams(mpz_class p, mpz_class q, mpz_class g, std::string_view h_label,
                         SecurityLevel level)
    : p_(std::move(p)), q_(std::move(q)), g_(std::move(g)), level_(level) {
    if (mpz_probab_prime_p(p_.get_mpz_t(), 40) == 0) throw ParameterError("modulus is not prime");
    if (mpz_probab_prime_p(q_.get_mpz_t(), 40) == 0) throw ParameterError("order is not prime");
    if ((p_ - 1) % q_ != 0) throw ParameterError("order does not divide p - 1");
    if (g_ <= 1 || g_ >= p_ || powm(g_, q_, p_) != 1) throw ParameterError("g does not have order q");
    h_ = hash_to_group(p_, q_, h_label, g_);

    element_bytes_ = byte_length(p_);
    scalar_bytes_ = byte_length(q_);

    Bytes fp;
    put_var(fp, export_fixed(p_, element_bytes_));
    put_var(fp, export_fixed(q_, scalar_bytes_));
    put_var(fp, export_fixed(g_, element_bytes_));
    put_var(fp, export_fixed(h_, element_bytes_));
    auto d = tagged_hash("abaudit/group-id/v1", fp);
    std::copy_n(d.begin(), id_.size(), id_.begin());
}

bool GroupParams::contains(const mpz_class& x) const {
    return x >= 1 && x < p_ && powm(x, q_, p_) == 1;
}

const GroupParams& setup_group(SecurityLevel level) {
    static std::once_flag test_once, prod_once;
    static std::unique_ptr<GroupParams> test_group, prod_group;
    if (level == SecurityLevel::test) {
        std::call_once(test_once, [] {
            test_group = std::make_unique<GroupParams>(mpz_class(kTestP, 10), mpz_class(kTestQ, 10),
                                                       mpz_class(kTestG, 10), kPedersenHLabel,
                                                       SecurityLevel::test);
        });
        return *test_group;
    }
    std::call_once(prod_once, [] {
        prod_group = std::make_unique<GroupParams>(
            mpz_class(kProductionP, 16), mpz_class(kProductionQ, 16), mpz_class(kProductionG, 16),
            kPedersenHLabel, SecurityLevel::production);
    });
    return *prod_group;
}

Scalar Scalar::from_u64(std::uint64_t v) {
    mpz_class x;
    mpz_import(x.get_mpz_t(), 1, 1, sizeof v, 0, 0, &v);
    return Scalar(std::move(x));
}

Bytes Scalar::to_bytes(const GroupParams& params) const {
    check_scalar(params, *this, "encoded");
    return export_fixed(value, params.scalar_bytes());
}

Scalar Scalar::from_bytes(const GroupParams& params, ByteView bytes) {
    if (bytes.size() != params.scalar_bytes()) throw DecodeError("scalar has wrong width");
    Scalar s(import_bytes(bytes));
    if (s.value >= params.order()) throw DecodeError("scalar not reduced mod q");
    return s;
}

Scalar add(const GroupParams& params, const Scalar& a, const Scalar& b) {
    mpz_class sum = (a.value + b.value) % params.order();
    if (sum < 0) sum += params.order();
    return Scalar(std::move(sum));
}

Scalar hash_to_scalar(const GroupParams& params, std::string_view domain, ByteView data) {
    Bytes wide;
    for (std::uint8_t block = 0; block < 2; ++block) {
        Bytes in;
        put_u8(in, block);
        put_bytes(in, data);
        put_bytes(wide, tagged_hash(domain, in));
    }
    return Scalar(import_bytes(wide) % params.order());
}

Bytes Commitment::to_bytes(const GroupParams& params) const {
    if (group != params.id()) throw ParameterError("commitment belongs to a different group");
    return export_fixed(element, params.element_bytes());
}

Commitment Commitment::from_bytes(const GroupParams& params, ByteView bytes) {
    if (bytes.size() != params.element_bytes()) throw DecodeError("commitment has wrong width");
    Commitment c{params.id(), import_bytes(bytes)};
    if (!params.contains(c.element)) throw DecodeError("commitment is not a subgroup element");
    return c;
}

Commitment commit(const GroupParams& params, const Scalar& v, const Scalar& r) {
    check_scalar(params, v, "value");
    check_scalar(params, r, "randomness");
    const auto& p = params.modulus();
    mpz_class c = powm(params.g(), v.value, p) * powm(params.h(), r.value, p) % p;
    return Commitment{params.id(), std::move(c)};
}

Commitment combine(const GroupParams& params, const Commitment& c1, const Commitment& c2) {
    if (c1.group != params.id() || c2.group != params.id()) {
        throw ParameterError("commitments were made under different group parameters");
    }
    return Commitment{params.id(), c1.element * c2.element % params.modulus()};
}

bool verify_opening(const GroupParams& params, const Commitment& c, const mpz_class& v,
                    const mpz_class& r) {
    if (c.group != params.id()) return false;
    const auto& q = params.order();
    mpz_class vr = v % q;
    if (vr < 0) vr += q;
    mpz_class rr = r % q;
    if (rr < 0) rr += q;
    return commit(params, Scalar(vr), Scalar(rr)) == c;
}

Scalar derive_randomness(const GroupParams& params, const CommitmentSecret& secret,
                         const Date& date, std::uint32_t index) {
    Bytes in;
    put_bytes(in, secret);
    put_string(in, date.iso());
    put_u32(in, index);
    return hash_to_scalar(params, "abaudit/commitment-randomness/v1", in);
}

}  // namespace abaudit::crypto
