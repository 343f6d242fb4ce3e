#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "abaudit/core/bytes.hpp"
#include "abaudit/core/date.hpp"
#include "abaudit/crypto/address.hpp"
#include "abaudit/crypto/group.hpp"
#include "abaudit/crypto/signature.hpp"

namespace abaudit::protocol {

using CompanyId = std::string;

// Trailing flag of a posted message: 0 when the sender posted it, 1 when the
// receiver did. A wallet posts outgoing aggregates with 0, incoming with 1.
enum class Direction : std::uint8_t { outgoing = 0, incoming = 1 };

inline int flag_of(Direction d) { return static_cast<int>(d); }
std::string_view to_string(Direction d);
// Accepts 0/1; throws ValidationError otherwise.
Direction direction_from_flag(int flag);

// Amounts are non-negative minor currency units below 2^53.
inline constexpr std::uint64_t kMaxAmount = (std::uint64_t{1} << 53) - 1;

// Join key for counterparty postings; ordered lexicographically over
// (sender, receiver, date).
struct PairKey {
    crypto::Address sender;
    crypto::Address receiver;
    Date date;

    friend bool operator==(const PairKey&, const PairKey&) = default;
    friend auto operator<=>(const PairKey& a, const PairKey& b) {
        if (auto c = a.sender <=> b.sender; c != 0) return c;
        if (auto c = a.receiver <=> b.receiver; c != 0) return c;
        return a.date <=> b.date;
    }

    std::string str() const;
};

// Identifies one side's message for a pair.
struct MessageRef {
    PairKey key;
    Direction flag = Direction::outgoing;

    friend bool operator==(const MessageRef&, const MessageRef&) = default;
    friend auto operator<=>(const MessageRef&, const MessageRef&) = default;
};

struct PostedMessage {
    crypto::Address sender;
    crypto::Address receiver;
    crypto::Commitment amount_commitment;
    crypto::Commitment detail_commitment;
    Date date;
    Direction flag = Direction::outgoing;
    crypto::Signature signature;
    crypto::Address signer;

    PairKey key() const { return {sender, receiver, date}; }
    MessageRef ref() const { return {key(), flag}; }
    // Address that must have signed, given the flag orientation.
    const crypto::Address& expected_signer() const {
        return flag == Direction::outgoing ? sender : receiver;
    }
};

// Bytes covered by the signature:
//   sender ‖ receiver ‖ amount_commitment ‖ detail_commitment ‖ YYYYMMDD ‖ flag
// Addresses appear in their 43-character text form; commitments as
// fixed-width big-endian group elements.
Bytes canonical_message_bytes(const crypto::GroupParams& params, const crypto::Address& sender,
                              const crypto::Address& receiver, const crypto::Commitment& amount,
                              const crypto::Commitment& detail, const Date& date, Direction flag);
Bytes canonical_message_bytes(const crypto::GroupParams& params, const PostedMessage& m);

// Signature check only; callers resolve the public key for m.signer.
bool verify_message_signature(const crypto::GroupParams& params, const PostedMessage& m,
                              const crypto::PublicKey& signer_key);

// Binary codec used by the event log and the wallet file.
void encode(Bytes& out, const crypto::GroupParams& params, const PostedMessage& m);
PostedMessage decode_message(ByteReader& in, const crypto::GroupParams& params);

// Scalar committed in detail_commitment: hash of the length-prefixed detail
// strings in staging order.
crypto::Scalar detail_scalar(const crypto::GroupParams& params, const std::vector<std::string>& details);

struct OpeningPackage {
    MessageRef ref;
    std::uint64_t amount = 0;
    crypto::Scalar amount_randomness;
    std::vector<std::string> details;
    crypto::Scalar detail_randomness;
};

// Both commitments of `m` reproduce from the package.
bool opening_matches(const crypto::GroupParams& params, const PostedMessage& m,
                     const OpeningPackage& package);

void encode(Bytes& out, const crypto::GroupParams& params, const OpeningPackage& p);
OpeningPackage decode_opening(ByteReader& in, const crypto::GroupParams& params);
void encode(Bytes& out, const PairKey& key);
PairKey decode_pair_key(ByteReader& in);

// JSON forms used on the service API. Binary fields are lowercase hex.
nlohmann::json to_json(const crypto::GroupParams& params, const PostedMessage& m);
PostedMessage message_from_json(const crypto::GroupParams& params, const nlohmann::json& j);
nlohmann::json to_json(const PairKey& key);
PairKey pair_key_from_json(const nlohmann::json& j);
nlohmann::json to_json(const crypto::GroupParams& params, const OpeningPackage& p);
OpeningPackage opening_from_json(const crypto::GroupParams& params, const nlohmann::json& j);

}  // namespace abaudit::protocol
