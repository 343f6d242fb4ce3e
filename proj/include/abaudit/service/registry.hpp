#pragma once

#include <map>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "abaudit/core/clock.hpp"
#include "abaudit/crypto/address.hpp"
#include "abaudit/crypto/signature.hpp"
#include "abaudit/matcher/matcher.hpp"

namespace abaudit::service {

using ParticipantId = std::string;

enum class Role : std::uint8_t { company, auditor, committee, operator_ };
std::string_view to_string(Role r);
Role parse_role(std::string_view text);

enum class AccessStatus : std::uint8_t { requested, granted, revoked };
std::string_view to_string(AccessStatus s);

struct Participant {
    ParticipantId id;
    Role role = Role::company;
    AccessStatus status = AccessStatus::requested;
    crypto::PublicKey auth_key;
    std::string profile;
    std::set<crypto::Address> addresses;
    Timestamp requested_at = 0;
    std::uint64_t last_nonce = 0;
};

// Permissioning registry. Doubles as the matcher's key directory: an
// address resolves only while its owner holds granted access.
class Registry : public matcher::KeyDirectory {
public:
    // Idempotent for the same id, role and key; a revoked participant that
    // asks again returns to requested.
    Participant request_access(const ParticipantId& id, Role role, const crypto::PublicKey& auth_key,
                               std::string profile, Timestamp now);
    // Seeds an already granted participant, used for committee and operator.
    void bootstrap(const ParticipantId& id, Role role, const crypto::PublicKey& auth_key);
    Participant set_status(const ParticipantId& id, AccessStatus status);
    // ConflictError when another participant owns the address.
    void register_address(const ParticipantId& id, const crypto::Address& address, const crypto::PublicKey& key);

    std::optional<Participant> get(const ParticipantId& id) const;
    std::vector<Participant> list(std::optional<AccessStatus> status = std::nullopt) const;
    std::optional<ParticipantId> owner_of(const crypto::Address& address) const;

    // Nonces must strictly increase per participant; AuthenticationError otherwise.
    void consume_nonce(const ParticipantId& id, std::uint64_t nonce);

    std::optional<crypto::PublicKey> key_for(const crypto::Address& address) const override;

private:
    mutable std::shared_mutex mutex_;
    std::map<ParticipantId, Participant> participants_;
    std::unordered_map<crypto::Address, std::pair<ParticipantId, crypto::PublicKey>, crypto::AddressHash>
        addresses_;
};

}  // namespace abaudit::service
