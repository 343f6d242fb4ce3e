#include "abaudit/service/registry.hpp"

#include <mutex>

#include "abaudit/core/errors.hpp"

namespace abaudit::service {

std::string_view to_string(Role r) {
    switch (r) {
        case Role::company: return "company";
        case Role::auditor: return "auditor";
        case Role::committee: return "committee";
        case Role::operator_: return "operator";
    }
    return "?";
}

Role parse_role(std::string_view text) {
    for (auto r : {Role::company, Role::auditor, Role::committee, Role::operator_}) {
        if (to_string(r) == text) return r;
    }
    throw ValidationError("unknown role: " + std::string(text));
}

std::string_view to_string(AccessStatus s) {
    switch (s) {
        case AccessStatus::requested: return "requested";
        case AccessStatus::granted: return "granted";
        case AccessStatus::revoked: return "revoked";
    }
    return "?";
}

Participant Registry::request_access(const ParticipantId& id, Role role, const crypto::PublicKey& auth_key,
                                     std::string profile, Timestamp now) {
    if (id.empty() || id.size() > 128) throw ValidationError("participant id must be 1-128 characters");
    std::unique_lock lock(mutex_);
    auto it = participants_.find(id);
    if (it != participants_.end()) {
        auto& p = it->second;
        if (p.auth_key != auth_key || p.role != role) {
            throw ConflictError("participant " + id + " exists with a different key or role");
        }
        if (p.status == AccessStatus::revoked) {
            p.status = AccessStatus::requested;
            p.requested_at = now;
        }
        return p;
    }
    Participant p;
    p.id = id;
    p.role = role;
    p.auth_key = auth_key;
    p.profile = std::move(profile);
    p.requested_at = now;
    return participants_.emplace(id, std::move(p)).first->second;
}

void Registry::bootstrap(const ParticipantId& id, Role role, const crypto::PublicKey& auth_key) {
    std::unique_lock lock(mutex_);
    if (participants_.count(id)) throw ConflictError("participant " + id + " already exists");
    Participant p;
    p.id = id;
    p.role = role;
    p.auth_key = auth_key;
    p.status = AccessStatus::granted;
    participants_.emplace(id, std::move(p));
}

Participant Registry::set_status(const ParticipantId& id, AccessStatus status) {
    std::unique_lock lock(mutex_);
    auto it = participants_.find(id);
    if (it == participants_.end()) throw NotFoundError("no participant " + id);
    it->second.status = status;
    return it->second;
}

void Registry::register_address(const ParticipantId& id, const crypto::Address& address,
                                const crypto::PublicKey& key) {
    if (crypto::derive_address(key) != address) throw ValidationError("public key does not hash to the address");
    std::unique_lock lock(mutex_);
    auto it = participants_.find(id);
    if (it == participants_.end()) throw NotFoundError("no participant " + id);
    auto owner = addresses_.find(address);
    if (owner != addresses_.end()) {
        if (owner->second.first != id) throw ConflictError("address is registered to another participant");
        return;
    }
    addresses_.emplace(address, std::make_pair(id, key));
    it->second.addresses.insert(address);
}

std::optional<Participant> Registry::get(const ParticipantId& id) const {
    std::shared_lock lock(mutex_);
    auto it = participants_.find(id);
    if (it == participants_.end()) return std::nullopt;
    return it->second;
}

std::vector<Participant> Registry::list(std::optional<AccessStatus> status) const {
    std::shared_lock lock(mutex_);
    std::vector<Participant> out;
    for (const auto& [id, p] : participants_) {
        if (!status || p.status == *status) out.push_back(p);
    }
    return out;
}

std::optional<ParticipantId> Registry::owner_of(const crypto::Address& address) const {
    std::shared_lock lock(mutex_);
    auto it = addresses_.find(address);
    if (it == addresses_.end()) return std::nullopt;
    return it->second.first;
}

void Registry::consume_nonce(const ParticipantId& id, std::uint64_t nonce) {
    std::unique_lock lock(mutex_);
    auto it = participants_.find(id);
    if (it == participants_.end()) throw AuthenticationError("unknown participant " + id);
    if (nonce <= it->second.last_nonce) throw AuthenticationError("nonce already used");
    it->second.last_nonce = nonce;
}

std::optional<crypto::PublicKey> Registry::key_for(const crypto::Address& address) const {
    std::shared_lock lock(mutex_);
    auto it = addresses_.find(address);
    if (it == addresses_.end()) return std::nullopt;
    auto p = participants_.find(it->second.first);
    if (p == participants_.end() || p->second.status != AccessStatus::granted) return std::nullopt;
    return it->second.second;
}

}  // namespace abaudit::service
