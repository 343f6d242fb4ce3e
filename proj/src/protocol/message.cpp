#include "abaudit/protocol/message.hpp"

#include "abaudit/core/errors.hpp"
#include "abaudit/protocol/json_util.hpp"

namespace abaudit::protocol {

using crypto::Address;
using crypto::Commitment;
using crypto::GroupParams;
using crypto::Scalar;
using nlohmann::json;

namespace {

Address read_address(ByteReader& in) { return Address(in.take_array<Address::kSize>()); }

Commitment read_commitment(ByteReader& in, const GroupParams& params) {
    return Commitment::from_bytes(params, in.take(params.element_bytes()));
}

Scalar read_scalar(ByteReader& in, const GroupParams& params) {
    return Scalar::from_bytes(params, in.take(params.scalar_bytes()));
}

Commitment commitment_from_hex(const GroupParams& params, const json& j) {
    return Commitment::from_bytes(params, from_hex(j.get<std::string>()));
}

Scalar scalar_from_hex(const GroupParams& params, const json& j) {
    return Scalar::from_bytes(params, from_hex(j.get<std::string>()));
}

}  // namespace

std::string_view to_string(Direction d) { return d == Direction::outgoing ? "outgoing" : "incoming"; }

Direction direction_from_flag(int flag) {
    if (flag == 0) return Direction::outgoing;
    if (flag == 1) return Direction::incoming;
    throw ValidationError("direction flag must be 0 or 1");
}

std::string PairKey::str() const { return sender.str() + "/" + receiver.str() + "/" + date.iso(); }

Bytes canonical_message_bytes(const GroupParams& params, const Address& sender,
                              const Address& receiver, const Commitment& amount,
                              const Commitment& detail, const Date& date, Direction flag) {
    Bytes out;
    out.reserve(2 * Address::kTextSize + 2 * params.element_bytes() + 9);
    put_string(out, sender.str());
    put_string(out, receiver.str());
    put_bytes(out, amount.to_bytes(params));
    put_bytes(out, detail.to_bytes(params));
    put_string(out, date.compact());
    put_u8(out, static_cast<std::uint8_t>(flag));
    return out;
}

Bytes canonical_message_bytes(const GroupParams& params, const PostedMessage& m) {
    return canonical_message_bytes(params, m.sender, m.receiver, m.amount_commitment,
                                   m.detail_commitment, m.date, m.flag);
}

bool verify_message_signature(const GroupParams& params, const PostedMessage& m,
                              const crypto::PublicKey& signer_key) {
    if (crypto::derive_address(signer_key) != m.signer) return false;
    return crypto::verify_sig(signer_key, canonical_message_bytes(params, m), m.signature);
}

void encode(Bytes& out, const GroupParams& params, const PostedMessage& m) {
    put_bytes(out, m.sender.raw());
    put_bytes(out, m.receiver.raw());
    put_bytes(out, m.amount_commitment.to_bytes(params));
    put_bytes(out, m.detail_commitment.to_bytes(params));
    put_u64(out, static_cast<std::uint64_t>(m.date.days_since_epoch()));
    put_u8(out, static_cast<std::uint8_t>(m.flag));
    put_bytes(out, m.signature.bytes());
    put_bytes(out, m.signer.raw());
}

PostedMessage decode_message(ByteReader& in, const GroupParams& params) {
    PostedMessage m;
    m.sender = read_address(in);
    m.receiver = read_address(in);
    m.amount_commitment = read_commitment(in, params);
    m.detail_commitment = read_commitment(in, params);
    m.date = Date::from_days(static_cast<std::int64_t>(in.u64()));
    m.flag = direction_from_flag(in.u8());
    m.signature = crypto::Signature::decode(in.take(crypto::Signature::kSize));
    m.signer = read_address(in);
    return m;
}

Scalar detail_scalar(const GroupParams& params, const std::vector<std::string>& details) {
    Bytes in;
    put_u32(in, static_cast<std::uint32_t>(details.size()));
    for (const auto& d : details) put_var(in, d);
    return crypto::hash_to_scalar(params, "abaudit/detail/v1", in);
}

bool opening_matches(const GroupParams& params, const PostedMessage& m, const OpeningPackage& p) {
    if (p.ref != m.ref()) return false;
    return crypto::verify_opening(params, m.amount_commitment, Scalar::from_u64(p.amount).value,
                                  p.amount_randomness.value) &&
           crypto::verify_opening(params, m.detail_commitment, detail_scalar(params, p.details).value,
                                  p.detail_randomness.value);
}

void encode(Bytes& out, const PairKey& key) {
    put_bytes(out, key.sender.raw());
    put_bytes(out, key.receiver.raw());
    put_u64(out, static_cast<std::uint64_t>(key.date.days_since_epoch()));
}

PairKey decode_pair_key(ByteReader& in) {
    PairKey k;
    k.sender = read_address(in);
    k.receiver = read_address(in);
    auto days = in.u64();
    try {
        k.date = Date::from_days(static_cast<std::int64_t>(days));
    } catch (const ValidationError&) {
        throw DecodeError("pair key date out of range");
    }
    return k;
}

void encode(Bytes& out, const GroupParams& params, const OpeningPackage& p) {
    encode(out, p.ref.key);
    put_u8(out, static_cast<std::uint8_t>(p.ref.flag));
    put_u64(out, p.amount);
    put_bytes(out, p.amount_randomness.to_bytes(params));
    put_u32(out, static_cast<std::uint32_t>(p.details.size()));
    for (const auto& d : p.details) put_var(out, d);
    put_bytes(out, p.detail_randomness.to_bytes(params));
}

OpeningPackage decode_opening(ByteReader& in, const GroupParams& params) {
    OpeningPackage p;
    p.ref.key = decode_pair_key(in);
    p.ref.flag = direction_from_flag(in.u8());
    p.amount = in.u64();
    p.amount_randomness = read_scalar(in, params);
    auto n = in.u32();
    if (n > in.remaining()) throw DecodeError("detail count exceeds input");
    for (std::uint32_t i = 0; i < n; ++i) p.details.push_back(in.var_string());
    p.detail_randomness = read_scalar(in, params);
    return p;
}

json to_json(const GroupParams& params, const PostedMessage& m) {
    return json{{"sender", m.sender.str()},
                {"receiver", m.receiver.str()},
                {"amount_commitment", to_hex(m.amount_commitment.to_bytes(params))},
                {"detail_commitment", to_hex(m.detail_commitment.to_bytes(params))},
                {"date", m.date.iso()},
                {"flag", flag_of(m.flag)},
                {"signature", m.signature.hex()},
                {"signer", m.signer.str()}};
}

PostedMessage message_from_json(const GroupParams& params, const json& j) {
    auto addr = [](const json& v) { return Address::parse(v.get<std::string>()); };
    PostedMessage m;
    m.sender = json_field(j, "sender", addr);
    m.receiver = json_field(j, "receiver", addr);
    m.amount_commitment = json_field(j, "amount_commitment", [&](const json& v) { return commitment_from_hex(params, v); });
    m.detail_commitment = json_field(j, "detail_commitment", [&](const json& v) { return commitment_from_hex(params, v); });
    m.date = json_field(j, "date", [](const json& v) { return Date::parse_iso(v.get<std::string>()); });
    m.flag = json_field(j, "flag", [](const json& v) { return direction_from_flag(v.get<int>()); });
    m.signature = json_field(j, "signature", [](const json& v) {
        return crypto::Signature::decode(from_hex(v.get<std::string>()));
    });
    m.signer = json_field(j, "signer", addr);
    return m;
}

json to_json(const PairKey& key) {
    return json{{"sender", key.sender.str()}, {"receiver", key.receiver.str()}, {"date", key.date.iso()}};
}

PairKey pair_key_from_json(const json& j) {
    auto addr = [](const json& v) { return Address::parse(v.get<std::string>()); };
    return PairKey{json_field(j, "sender", addr), json_field(j, "receiver", addr),
                   json_field(j, "date", [](const json& v) { return Date::parse_iso(v.get<std::string>()); })};
}

json to_json(const GroupParams& params, const OpeningPackage& p) {
    return json{{"key", to_json(p.ref.key)},
                {"flag", flag_of(p.ref.flag)},
                {"amount", p.amount},
                {"amount_randomness", to_hex(p.amount_randomness.to_bytes(params))},
                {"details", p.details},
                {"detail_randomness", to_hex(p.detail_randomness.to_bytes(params))}};
}

OpeningPackage opening_from_json(const GroupParams& params, const json& j) {
    OpeningPackage p;
    p.ref.key = json_field(j, "key", [](const json& v) { return pair_key_from_json(v); });
    p.ref.flag = json_field(j, "flag", [](const json& v) { return direction_from_flag(v.get<int>()); });
    p.amount = json_field(j, "amount", [](const json& v) { return v.get<std::uint64_t>(); });
    p.amount_randomness = json_field(j, "amount_randomness", [&](const json& v) { return scalar_from_hex(params, v); });
    p.details = json_field(j, "details", [](const json& v) { return v.get<std::vector<std::string>>(); });
    p.detail_randomness = json_field(j, "detail_randomness", [&](const json& v) { return scalar_from_hex(params, v); });
    return p;
}

}  // namespace abaudit::protocol
