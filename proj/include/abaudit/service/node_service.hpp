#pragma once

#include <array>
#include <atomic>
#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "abaudit/ledger/ledger.hpp"
#include "abaudit/matcher/matcher.hpp"
#include "abaudit/service/registry.hpp"
#include "abaudit/service/rewards.hpp"

namespace abaudit::service {

using nlohmann::json;

inline constexpr std::array<std::string_view, 15> kEndpoints{
    "request-access", "grant-access",   "revoke-access",  "list-access-requests", "register-address",
    "post-message",   "list-pairs",     "opening-requests", "request-opening",    "submit-opening",
    "get-record",     "verify-chain",   "rewards",        "finalize",             "flag-stale",
};

// Roles allowed to call an endpoint once granted. request-access is open to
// anyone holding the key it names and is not listed here.
std::vector<Role> allowed_roles(std::string_view endpoint);
bool is_open_endpoint(std::string_view endpoint);

// Bytes a caller signs: domain ‖ endpoint ‖ participant ‖ u64 nonce ‖ payload.dump().
Bytes request_signing_bytes(std::string_view endpoint, std::string_view participant, std::uint64_t nonce,
                            const json& payload);
json make_request(std::string_view endpoint, std::string_view participant, std::uint64_t nonce,
                  const json& payload, const crypto::KeyPair& key);

// Proof that the registering participant controls an address key.
Bytes address_proof_bytes(std::string_view participant, const crypto::Address& address);

// Error codes carried in failed responses, and their HTTP mapping.
std::string_view error_code(const std::exception& e);
int http_status_for(std::string_view code);
[[noreturn]] void throw_error(std::string_view code, const std::string& message);

json to_json(const crypto::GroupParams& params, const matcher::PairRecord& r, bool reveal_openings);
json to_json(const crypto::GroupParams& params, const matcher::OpeningRequest& q, bool reveal_opening);
json to_json(const crypto::GroupParams& params, const ledger::LedgerRecord& r);
json to_json(const Participant& p);
json to_json(const ledger::ChainCheck& c);

struct ServiceConfig {
    RewardConfig rewards;
    std::size_t max_page_size = 500;
    std::size_t default_batch = 100;
    std::string chain_label = "abaudit-ledger";
};

// Request handlers over the matcher, ledger, registry and reward book.
// Every request is a signed envelope
//   { endpoint, participant, nonce, payload, signature }
// and every response is { seq, ok, result | error{code, message} } with seq
// strictly increasing across responses.
class NodeService {
public:
    NodeService(const crypto::GroupParams& params, crypto::KeyPair operator_key, ServiceConfig config = {},
                Clock clock = system_clock());

    void bootstrap(const ParticipantId& id, Role role, const crypto::PublicKey& auth_key);

    json handle(const json& request);
    // Parses body as JSON first; sets http_status when given.
    std::string handle_text(std::string_view body, int* http_status = nullptr);

    // Credits a granted participant; AuthorizationError otherwise.
    RewardEntry credit_reward(const ParticipantId& id, RewardEvent event);

    const crypto::GroupParams& group() const { return *params_; }
    Registry& registry() { return registry_; }
    matcher::Matcher& matcher() { return matcher_; }
    ledger::Ledger& ledger() { return ledger_; }
    const RewardBook& rewards() const { return rewards_; }
    std::uint64_t last_seq() const { return seq_.load(); }

private:
    json dispatch(const Participant& caller, const std::string& endpoint, const json& payload);
    json request_access(const std::string& participant, const json& payload, const crypto::Signature& sig,
                        std::uint64_t nonce);

    bool can_see(const Participant& caller, const protocol::PairKey& key) const;

    const crypto::GroupParams* params_;
    crypto::KeyPair operator_key_;
    ServiceConfig config_;
    Clock clock_;
    Registry registry_;
    ledger::Ledger ledger_;
    matcher::Matcher matcher_;
    RewardBook rewards_;
    std::atomic<std::uint64_t> seq_{0};
};

// Builds signed requests with increasing nonces and sends them through a
// transport (in-process or HTTP).
class ServiceClient {
public:
    using Transport = std::function<json(const json&)>;

    // Nonces continue after last_nonce; processes that outlive one session
    // can seed it from the wall clock.
    ServiceClient(ParticipantId id, crypto::KeyPair key, Transport transport, std::uint64_t last_nonce = 0);

    // Full response envelope.
    json call(std::string_view endpoint, const json& payload = json::object());
    // Result object; failed responses are rethrown as the matching error type.
    json result(std::string_view endpoint, const json& payload = json::object());

    const ParticipantId& id() const { return id_; }
    const crypto::KeyPair& key() const { return key_; }

private:
    ParticipantId id_;
    crypto::KeyPair key_;
    Transport transport_;
    std::atomic<std::uint64_t> nonce_{0};
};

ServiceClient::Transport in_process(NodeService& service);

}  // namespace abaudit::service
