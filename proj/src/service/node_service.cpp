#include "abaudit/service/node_service.hpp"

#include <algorithm>

#include "abaudit/core/errors.hpp"
#include "abaudit/protocol/json_util.hpp"

namespace abaudit::service {

using matcher::PairState;
using protocol::json_get;
using protocol::json_get_or;

namespace {

constexpr std::string_view kRequestDomain = "abaudit/request/v1";
constexpr std::string_view kAddressProofDomain = "abaudit/register-address/v1";

crypto::PublicKey key_from_hex(const json& j, const char* name) {
    return protocol::json_field(j, name, [](const json& v) {
        return crypto::PublicKey::from_bytes(from_hex(v.get<std::string>()));
    });
}

crypto::Signature sig_from_hex(const json& j, const char* name) {
    return protocol::json_field(j, name, [](const json& v) {
        return crypto::Signature::decode(from_hex(v.get<std::string>()));
    });
}

bool owns(const Participant& p, const crypto::Address& a) { return p.addresses.count(a) != 0; }

}  // namespace

std::vector<Role> allowed_roles(std::string_view endpoint) {
    using R = Role;
    if (endpoint == "grant-access" || endpoint == "revoke-access" || endpoint == "list-access-requests") {
        return {R::committee};
    }
    if (endpoint == "register-address" || endpoint == "post-message" || endpoint == "opening-requests" ||
        endpoint == "submit-opening") {
        return {R::company};
    }
    if (endpoint == "list-pairs" || endpoint == "get-record") return {R::company, R::auditor};
    if (endpoint == "request-opening" || endpoint == "flag-stale") return {R::auditor};
    if (endpoint == "verify-chain" || endpoint == "rewards") {
        return {R::company, R::auditor, R::committee, R::operator_};
    }
    if (endpoint == "finalize") return {R::operator_};
    return {};
}

bool is_open_endpoint(std::string_view endpoint) { return endpoint == "request-access"; }

Bytes request_signing_bytes(std::string_view endpoint, std::string_view participant, std::uint64_t nonce,
                            const json& payload) {
    Bytes out;
    put_var(out, kRequestDomain);
    put_var(out, endpoint);
    put_var(out, participant);
    put_u64(out, nonce);
    put_var(out, payload.dump());
    return out;
}

json make_request(std::string_view endpoint, std::string_view participant, std::uint64_t nonce,
                  const json& payload, const crypto::KeyPair& key) {
    auto sig = crypto::sign(key, request_signing_bytes(endpoint, participant, nonce, payload));
    return {{"endpoint", endpoint},
            {"participant", participant},
            {"nonce", nonce},
            {"payload", payload},
            {"signature", sig.hex()}};
}

Bytes address_proof_bytes(std::string_view participant, const crypto::Address& address) {
    Bytes out;
    put_var(out, kAddressProofDomain);
    put_var(out, participant);
    put_var(out, address.str());
    return out;
}

std::string_view error_code(const std::exception& e) {
    if (dynamic_cast<const InvalidOpening*>(&e)) return "invalid_opening";
    if (dynamic_cast<const AuthenticationError*>(&e)) return "unauthenticated";
    if (dynamic_cast<const AuthorizationError*>(&e)) return "forbidden";
    if (dynamic_cast<const NotFoundError*>(&e)) return "not_found";
    if (dynamic_cast<const ConflictError*>(&e)) return "conflict";
    if (dynamic_cast<const StateError*>(&e)) return "state";
    if (dynamic_cast<const ValidationError*>(&e)) return "validation";
    if (dynamic_cast<const DecodeError*>(&e)) return "decode";
    if (dynamic_cast<const RangeError*>(&e)) return "range";
    if (dynamic_cast<const ParameterError*>(&e)) return "parameter";
    if (dynamic_cast<const json::exception*>(&e)) return "validation";
    return "internal";
}

int http_status_for(std::string_view code) {
    if (code == "unauthenticated") return 401;
    if (code == "forbidden") return 403;
    if (code == "not_found") return 404;
    if (code == "conflict" || code == "state") return 409;
    if (code == "invalid_opening") return 422;
    if (code == "internal") return 500;
    return 400;
}

void throw_error(std::string_view code, const std::string& message) {
    if (code == "invalid_opening") throw InvalidOpening(message);
    if (code == "unauthenticated") throw AuthenticationError(message);
    if (code == "forbidden") throw AuthorizationError(message);
    if (code == "not_found") throw NotFoundError(message);
    if (code == "conflict") throw ConflictError(message);
    if (code == "state") throw StateError(message);
    if (code == "validation") throw ValidationError(message);
    if (code == "decode") throw DecodeError(message);
    if (code == "range") throw RangeError(message);
    if (code == "parameter") throw ParameterError(message);
    throw Error(message);
}

json to_json(const crypto::GroupParams& params, const matcher::OpeningRequest& q, bool reveal_opening) {
    json j{{"id", q.id},
           {"key", protocol::to_json(q.key)},
           {"auditor", q.auditor_id},
           {"target", protocol::flag_of(q.target)},
           {"status", matcher::to_string(q.status)},
           {"created_at", q.created_at}};
    if (q.package && reveal_opening) {
        j["package"] = protocol::to_json(params, *q.package);
        j["revealed_amount"] = q.package->amount;
        j["commitment_verified"] = true;
    }
    return j;
}

json to_json(const crypto::GroupParams& params, const matcher::PairRecord& r, bool reveal_openings) {
    json slots = json::array();
    for (const auto& s : r.slots) {
        if (!s) {
            slots.push_back(nullptr);
            continue;
        }
        slots.push_back({{"message", protocol::to_json(params, s->message)},
                         {"signer_key", s->signer_key.hex()},
                         {"received_at", s->received_at}});
    }
    json history = json::array();
    for (const auto& t : r.history) history.push_back({{"state", matcher::to_string(t.state)}, {"at", t.at}});
    json requests = json::array();
    for (const auto& q : r.opening_requests) requests.push_back(to_json(params, q, reveal_openings));
    return {{"key", protocol::to_json(r.key)},
            {"state", matcher::to_string(r.state)},
            {"slots", slots},
            {"history", history},
            {"opening_requests", requests},
            {"stale", r.stale},
            {"ledger_height", r.ledger_height ? json(*r.ledger_height) : json(nullptr)}};
}

json to_json(const crypto::GroupParams& params, const ledger::LedgerRecord& r) {
    json sides = json::array();
    for (const auto& s : r.sides) {
        sides.push_back({{"amount_commitment", to_hex(s.amount_commitment.to_bytes(params))},
                         {"detail_commitment", to_hex(s.detail_commitment.to_bytes(params))},
                         {"signature", s.signature.hex()},
                         {"signer_key", s.signer_key.hex()}});
    }
    return {{"key", protocol::to_json(r.key)},
            {"sides", sides},
            {"verified_at", r.verified_at},
            {"annotation", ledger::to_string(r.annotation)}};
}

json to_json(const Participant& p) {
    json addrs = json::array();
    for (const auto& a : p.addresses) addrs.push_back(a.str());
    return {{"id", p.id},
            {"role", to_string(p.role)},
            {"status", to_string(p.status)},
            {"auth_key", p.auth_key.hex()},
            {"profile", p.profile},
            {"addresses", addrs},
            {"requested_at", p.requested_at}};
}

json to_json(const ledger::ChainCheck& c) {
    return {{"ok", c.ok},
            {"first_bad_height", c.first_bad_height ? json(*c.first_bad_height) : json(nullptr)},
            {"reason", c.reason}};
}

NodeService::NodeService(const crypto::GroupParams& params, crypto::KeyPair operator_key, ServiceConfig config,
                         Clock clock)
    : params_(&params),
      operator_key_(std::move(operator_key)),
      config_(std::move(config)),
      clock_(std::move(clock)),
      ledger_(params, operator_key_.public_key(), clock_, config_.chain_label),
      matcher_(params, registry_, clock_),
      rewards_(config_.rewards) {}

void NodeService::bootstrap(const ParticipantId& id, Role role, const crypto::PublicKey& auth_key) {
    registry_.bootstrap(id, role, auth_key);
}

RewardEntry NodeService::credit_reward(const ParticipantId& id, RewardEvent event) {
    auto p = registry_.get(id);
    if (!p || p->status != AccessStatus::granted) {
        throw AuthorizationError("rewards go only to granted participants");
    }
    return rewards_.credit(id, event, clock_());
}

json NodeService::handle(const json& request) {
    json response;
    try {
        auto endpoint = json_get<std::string>(request, "endpoint");
        if (std::find(kEndpoints.begin(), kEndpoints.end(), endpoint) == kEndpoints.end()) {
            throw NotFoundError("unknown endpoint " + endpoint);
        }
        auto participant = json_get<std::string>(request, "participant");
        auto nonce = json_get<std::uint64_t>(request, "nonce");
        auto payload = protocol::json_field(request, "payload", [](const json& v) {
            if (!v.is_object()) throw ValidationError("payload must be an object");
            return v;
        });
        crypto::Signature sig;
        try {
            sig = sig_from_hex(request, "signature");
        } catch (const Error&) {
            throw AuthenticationError("malformed request signature");
        }

        json result;
        if (is_open_endpoint(endpoint)) {
            result = request_access(participant, payload, sig, nonce);
        } else {
            auto caller = registry_.get(participant);
            if (!caller) throw AuthenticationError("unknown participant " + participant);
            if (!crypto::verify_sig(caller->auth_key, request_signing_bytes(endpoint, participant, nonce, payload),
                                    sig)) {
                throw AuthenticationError("request signature does not verify");
            }
            registry_.consume_nonce(participant, nonce);
            if (caller->status != AccessStatus::granted) {
                throw AuthorizationError("access is " + std::string(to_string(caller->status)));
            }
            auto roles = allowed_roles(endpoint);
            if (std::find(roles.begin(), roles.end(), caller->role) == roles.end()) {
                throw AuthorizationError("role " + std::string(to_string(caller->role)) + " may not call " +
                                         endpoint);
            }
            result = dispatch(*caller, endpoint, payload);
        }
        response = {{"ok", true}, {"result", std::move(result)}};
    } catch (const std::exception& e) {
        response = {{"ok", false}, {"error", {{"code", error_code(e)}, {"message", e.what()}}}};
    }
    response["seq"] = seq_.fetch_add(1) + 1;
    return response;
}

std::string NodeService::handle_text(std::string_view body, int* http_status) {
    json response;
    auto parsed = json::parse(body, nullptr, false);
    if (parsed.is_discarded()) {
        response = {{"ok", false}, {"error", {{"code", "validation"}, {"message", "request body is not JSON"}}}};
        response["seq"] = seq_.fetch_add(1) + 1;
    } else {
        response = handle(parsed);
    }
    if (http_status) {
        *http_status = response["ok"].get<bool>()
                           ? 200
                           : http_status_for(response["error"]["code"].get<std::string>());
    }
    return response.dump();
}

json NodeService::request_access(const std::string& participant, const json& payload,
                                 const crypto::Signature& sig, std::uint64_t nonce) {
    auto role = parse_role(json_get<std::string>(payload, "role"));
    auto key = key_from_hex(payload, "auth_key");
    if (!crypto::verify_sig(key, request_signing_bytes("request-access", participant, nonce, payload), sig)) {
        throw AuthenticationError("request signature does not verify under the offered key");
    }
    if (role != Role::company && role != Role::auditor) {
        throw AuthorizationError("role " + std::string(to_string(role)) + " cannot be requested");
    }
    auto p = registry_.request_access(participant, role, key, json_get_or<std::string>(payload, "profile", ""),
                                      clock_());
    registry_.consume_nonce(participant, nonce);
    return to_json(p);
}

bool NodeService::can_see(const Participant& caller, const protocol::PairKey& key) const {
    if (caller.role == Role::auditor) return true;
    return owns(caller, key.sender) || owns(caller, key.receiver);
}

json NodeService::dispatch(const Participant& caller, const std::string& endpoint, const json& payload) {
    if (endpoint == "grant-access" || endpoint == "revoke-access") {
        auto target = json_get<std::string>(payload, "participant");
        auto status = endpoint == "grant-access" ? AccessStatus::granted : AccessStatus::revoked;
        return to_json(registry_.set_status(target, status));
    }
    if (endpoint == "list-access-requests") {
        std::optional<AccessStatus> filter = AccessStatus::requested;
        auto text = json_get_or<std::string>(payload, "status", "requested");
        if (text == "all") filter.reset();
        else if (text == "granted") filter = AccessStatus::granted;
        else if (text == "revoked") filter = AccessStatus::revoked;
        else if (text != "requested") throw ValidationError("unknown status filter " + text);
        json out = json::array();
        for (const auto& p : registry_.list(filter)) out.push_back(to_json(p));
        return {{"participants", out}};
    }
    if (endpoint == "register-address") {
        auto address = protocol::json_field(payload, "address", [](const json& v) {
            return crypto::Address::parse(v.get<std::string>());
        });
        auto key = key_from_hex(payload, "public_key");
        auto proof = sig_from_hex(payload, "proof");
        if (!crypto::verify_sig(key, address_proof_bytes(caller.id, address), proof)) {
            throw ValidationError("address proof does not verify");
        }
        registry_.register_address(caller.id, address, key);
        return {{"participant", caller.id}, {"address", address.str()}};
    }
    if (endpoint == "post-message") {
        auto m = protocol::json_field(payload, "message",
                                      [&](const json& v) { return protocol::message_from_json(*params_, v); });
        if (!owns(caller, m.signer)) throw AuthorizationError("signer address is not registered to the caller");
        auto res = matcher_.ingest(m);
        if (res.changed) rewards_.credit(caller.id, RewardEvent::posted_message, clock_());
        return {{"state", matcher::to_string(res.state)}, {"changed", res.changed},
                {"key", protocol::to_json(m.key())}};
    }
    if (endpoint == "list-pairs") {
        std::optional<PairState> state;
        auto text = json_get_or<std::string>(payload, "state", "");
        if (!text.empty()) state = matcher::parse_pair_state(text);
        auto page = json_get_or<std::size_t>(payload, "page", 0);
        auto page_size = json_get_or<std::size_t>(payload, "page_size", 50);
        if (page_size == 0 || page_size > config_.max_page_size) {
            throw ValidationError("page_size must be between 1 and " + std::to_string(config_.max_page_size));
        }
        std::function<bool(const matcher::PairRecord&)> visible;
        if (caller.role != Role::auditor) {
            visible = [&](const matcher::PairRecord& r) { return can_see(caller, r.key); };
        }
        auto result = matcher_.list_by_state(state, page, page_size, visible);
        json records = json::array();
        for (const auto& r : result.records) records.push_back(to_json(*params_, r, caller.role == Role::auditor));
        return {{"total", result.total}, {"page", page}, {"page_size", page_size}, {"records", records}};
    }
    if (endpoint == "opening-requests") {
        json out = json::array();
        for (const auto& a : caller.addresses) {
            for (const auto& q : matcher_.open_requests_for(a)) out.push_back(to_json(*params_, q, false));
        }
        return {{"requests", out}};
    }
    if (endpoint == "request-opening") {
        auto key = protocol::json_field(payload, "key", [](const json& v) { return protocol::pair_key_from_json(v); });
        auto target = protocol::direction_from_flag(json_get<int>(payload, "target"));
        return to_json(*params_, matcher_.request_opening(key, caller.id, true, target), true);
    }
    if (endpoint == "submit-opening") {
        auto id = json_get<std::uint64_t>(payload, "request_id");
        auto package = protocol::json_field(payload, "package",
                                            [&](const json& v) { return protocol::opening_from_json(*params_, v); });
        auto q = matcher_.opening_request(id);
        if (!q) throw NotFoundError("no opening request " + std::to_string(id));
        auto record = matcher_.get(q->key);
        const auto& slot = record->slot(q->target);
        if (!slot || !owns(caller, slot->message.signer)) {
            throw AuthorizationError("the request targets another participant's message");
        }
        auto updated = matcher_.submit_opening(id, package);
        rewards_.credit(caller.id, RewardEvent::fulfilled_opening, clock_());
        return {{"request", to_json(*params_, *matcher_.opening_request(id), false)},
                {"state", matcher::to_string(updated.state)}};
    }
    if (endpoint == "get-record") {
        auto key = protocol::json_field(payload, "key", [](const json& v) { return protocol::pair_key_from_json(v); });
        std::optional<ledger::RecordLocation> loc;
        if (can_see(caller, key)) loc = ledger_.get_record(key);
        if (!loc) throw NotFoundError("no ledger record for " + key.str());
        return {{"height", loc->height},
                {"index", loc->index},
                {"block_hash", to_hex(ledger_.block(loc->height).block_hash)},
                {"record", to_json(*params_, loc->record)}};
    }
    if (endpoint == "verify-chain") {
        auto j = to_json(ledger_.verify_chain());
        j["height"] = ledger_.height();
        j["tip_hash"] = to_hex(ledger_.tip_hash());
        return j;
    }
    if (endpoint == "rewards") {
        auto who = json_get_or<std::string>(payload, "participant", caller.id);
        if (who != caller.id && (caller.role == Role::company || caller.role == Role::operator_)) {
            throw AuthorizationError("participants may only read their own reward account");
        }
        auto account = rewards_.account(who);
        json events = json::array();
        for (const auto& e : account.events) {
            events.push_back({{"event", to_string(e.event)}, {"points", e.points}, {"at", e.at}});
        }
        return {{"participant", who}, {"points", account.points}, {"events", events}};
    }
    if (endpoint == "finalize") {
        auto batch = json_get_or<std::size_t>(payload, "batch_size", config_.default_batch);
        bool all = json_get_or<bool>(payload, "all", true);
        std::vector<matcher::FinalizeReceipt> receipts;
        if (all) {
            receipts = matcher_.finalize_all(batch, ledger_, operator_key_);
        } else if (auto r = matcher_.finalize_verified(batch, ledger_, operator_key_); r.block_height) {
            receipts.push_back(std::move(r));
        }
        json blocks = json::array();
        for (const auto& r : receipts) {
            rewards_.credit(caller.id, RewardEvent::block_signed, clock_());
            blocks.push_back({{"height", *r.block_height}, {"records", r.keys.size()}});
        }
        return {{"blocks", blocks}, {"height", ledger_.height()}, {"tip_hash", to_hex(ledger_.tip_hash())}};
    }
    if (endpoint == "flag-stale") {
        auto age = json_get_or<std::int64_t>(payload, "age_seconds", 7 * 86400);
        json keys = json::array();
        for (const auto& r : matcher_.flag_stale_pending(age)) keys.push_back(protocol::to_json(r.key));
        return {{"flagged", keys}};
    }
    throw NotFoundError("unknown endpoint " + endpoint);
}

ServiceClient::ServiceClient(ParticipantId id, crypto::KeyPair key, Transport transport, std::uint64_t last_nonce)
    : id_(std::move(id)), key_(std::move(key)), transport_(std::move(transport)), nonce_(last_nonce) {}

json ServiceClient::call(std::string_view endpoint, const json& payload) {
    auto nonce = nonce_.fetch_add(1) + 1;
    return transport_(make_request(endpoint, id_, nonce, payload, key_));
}

json ServiceClient::result(std::string_view endpoint, const json& payload) {
    auto response = call(endpoint, payload);
    if (!response.value("ok", false)) {
        const auto& err = response.at("error");
        throw_error(err.at("code").get<std::string>(), err.at("message").get<std::string>());
    }
    return response.at("result");
}

ServiceClient::Transport in_process(NodeService& service) {
    return [&service](const json& request) { return service.handle(request); };
}

}  // namespace abaudit::service
