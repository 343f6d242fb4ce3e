#include "abaudit/matcher/matcher.hpp"

#include <algorithm>

#include "abaudit/core/errors.hpp"

namespace abaudit::matcher {

namespace {

constexpr std::array<std::string_view, 5> kStateNames{"pending", "verified", "risk", "risk-resolved-verified",
                                                      "risk-confirmed-mismatch"};

std::size_t idx(Direction d) { return static_cast<std::size_t>(d); }

bool same_message(const crypto::GroupParams& params, const PostedMessage& a, const PostedMessage& b) {
    return a.signature.bytes() == b.signature.bytes() &&
           protocol::canonical_message_bytes(params, a) == protocol::canonical_message_bytes(params, b);
}

}  // namespace

std::string_view to_string(PairState s) { return kStateNames.at(static_cast<std::size_t>(s)); }

PairState parse_pair_state(std::string_view text) {
    for (std::size_t i = 0; i < kStateNames.size(); ++i) {
        if (kStateNames[i] == text) return static_cast<PairState>(i);
    }
    throw ValidationError("unknown pair state: " + std::string(text));
}

std::string_view to_string(OpeningStatus s) {
    switch (s) {
        case OpeningStatus::requested: return "requested";
        case OpeningStatus::fulfilled: return "fulfilled";
        case OpeningStatus::refused: return "refused";
    }
    return "?";
}

void StaticKeyDirectory::add(const crypto::PublicKey& key) {
    std::unique_lock lock(mutex_);
    keys_.insert_or_assign(crypto::derive_address(key), key);
}

std::optional<crypto::PublicKey> StaticKeyDirectory::key_for(const crypto::Address& address) const {
    std::shared_lock lock(mutex_);
    auto it = keys_.find(address);
    if (it == keys_.end()) return std::nullopt;
    return it->second;
}

PairState classify(const std::array<std::optional<Slot>, 2>& slots) {
    const auto& a = slots[0];
    const auto& b = slots[1];
    if (!a && !b) throw StateError("classify called on a pair with no messages");
    if (!a || !b) return PairState::pending;
    bool equal = a->message.amount_commitment == b->message.amount_commitment &&
                 a->message.detail_commitment == b->message.detail_commitment;
    return equal ? PairState::verified : PairState::risk;
}

struct Matcher::Entry {
    PairRecord record;
};

Matcher::Matcher(const crypto::GroupParams& params, const KeyDirectory& directory, Clock clock)
    : params_(&params), directory_(&directory), clock_(std::move(clock)) {}

Matcher::~Matcher() = default;

std::mutex& Matcher::stripe(const PairKey& key) const {
    auto raw = key.sender.raw();
    std::size_t h = raw[0] ^ (static_cast<std::size_t>(raw[1]) << 8);
    h ^= static_cast<std::size_t>(key.receiver.raw()[0]) << 3;
    h += static_cast<std::size_t>(key.date.days_since_epoch());
    return stripes_[h % stripes_.size()];
}

const Matcher::Entry* Matcher::find_entry(const PairKey& key) const {
    auto it = records_.find(key);
    return it == records_.end() ? nullptr : it->second.get();
}

// Caller holds index_mutex_ exclusively when create is true and the key may
// be new.
Matcher::Entry& Matcher::entry_for(const PairKey& key, bool create) {
    auto it = records_.find(key);
    if (it != records_.end()) return *it->second;
    if (!create) throw NotFoundError("no pair " + key.str());
    auto e = std::make_unique<Entry>();
    e->record.key = key;
    return *records_.emplace(key, std::move(e)).first->second;
}

void Matcher::transition(PairRecord& r, PairState next, Timestamp now) {
    if (r.history.empty() || r.history.back().state != next) {
        r.history.push_back({next, now});
    }
    r.state = next;
    if (next != PairState::pending) r.stale = false;
}

void Matcher::check_invariants(const PairRecord& r) const {
    int filled = (r.slots[0] ? 1 : 0) + (r.slots[1] ? 1 : 0);
    auto fail = [&](const char* what) { throw StateError(std::string("invariant violated for ") + r.key.str() + ": " + what); };
    if ((r.state == PairState::pending) != (filled == 1)) fail("pending iff exactly one slot");
    for (const auto& s : r.slots) {
        if (s && s->message.key() != r.key) fail("slot holds a message for another key");
    }
    if (filled == 2) {
        bool equal = r.slots[0]->message.amount_commitment == r.slots[1]->message.amount_commitment &&
                     r.slots[0]->message.detail_commitment == r.slots[1]->message.detail_commitment;
        if (r.state == PairState::verified && !equal) fail("verified with differing commitments");
        bool risk_family = r.state == PairState::risk || r.state == PairState::risk_resolved_verified ||
                           r.state == PairState::risk_confirmed_mismatch;
        if (risk_family && equal) fail("risk with equal commitments");
    }
    if (r.ledger_height && r.state != PairState::verified && r.state != PairState::risk_resolved_verified) {
        fail("ledgered record is not verified");
    }
    if (r.stale && r.state != PairState::pending) fail("stale flag outside pending");
}

IngestResult Matcher::ingest(const PostedMessage& m) {
    try {
        if (!directory_->key_for(m.sender) || !directory_->key_for(m.receiver)) {
            throw AuthorizationError("unregistered party");
        }
        if (m.signer != m.expected_signer()) {
            throw ValidationError("signer does not match the flag orientation");
        }
        auto key = directory_->key_for(m.signer);
        bool sig_ok = false;
        try {
            sig_ok = protocol::verify_message_signature(*params_, m, *key);
        } catch (const ParameterError&) {
            throw ValidationError("commitments belong to another group");
        }
        if (!sig_ok) throw ValidationError("bad signature");
        auto state = apply_ingest(m, *key, clock_(), true);
        ingested_.fetch_add(1, std::memory_order_relaxed);
        return state;
    } catch (...) {
        rejected_.fetch_add(1, std::memory_order_relaxed);
        throw;
    }
}

IngestResult Matcher::apply_ingest(const PostedMessage& m, const crypto::PublicKey& signer_key, Timestamp now,
                                bool log) {
    const PairKey key = m.key();
    std::shared_lock index(index_mutex_);
    if (!find_entry(key)) {
        index.unlock();
        {
            std::unique_lock excl(index_mutex_);
            entry_for(key, true);
        }
        index.lock();
    }
    std::lock_guard guard(stripe(key));
    PairRecord& r = entry_for(key, false).record;

    if (r.ledger_height) throw ConflictError("pair " + key.str() + " is already on the ledger");
    auto& slot = r.slots[idx(m.flag)];
    if (slot && same_message(*params_, slot->message, m)) return {r.state, false};

    const bool superseding = slot.has_value();
    slot = Slot{m, signer_key, now};
    if (superseding) {
        for (auto& req : r.opening_requests) {
            if (req.status == OpeningStatus::requested) req.status = OpeningStatus::refused;
        }
    }
    classify_calls_.fetch_add(1, std::memory_order_relaxed);
    transition(r, classify(r.slots), now);
    check_invariants(r);

    if (log) {
        Bytes p;
        put_u64(p, static_cast<std::uint64_t>(now));
        protocol::encode(p, *params_, m);
        put_bytes(p, signer_key.bytes());
        log_.append(kIngestTag, p);
    }
    return {r.state, true};
}

std::optional<PairRecord> Matcher::get(const PairKey& key) const {
    std::shared_lock index(index_mutex_);
    const Entry* e = find_entry(key);
    if (!e) return std::nullopt;
    std::lock_guard guard(stripe(key));
    return e->record;
}

namespace {

// Holds every stripe so readers see one consistent state.
template <typename Stripes>
std::vector<std::unique_lock<std::mutex>> lock_all(Stripes& stripes) {
    std::vector<std::unique_lock<std::mutex>> locks;
    locks.reserve(stripes.size());
    for (auto& m : stripes) locks.emplace_back(m);
    return locks;
}

}  // namespace

Page Matcher::list_by_state(std::optional<PairState> state, std::size_t page, std::size_t page_size,
                            const std::function<bool(const PairRecord&)>& visible) const {
    if (page_size == 0) throw ParameterError("page size must be positive");
    std::shared_lock index(index_mutex_);
    auto locks = lock_all(stripes_);
    Page out;
    const std::size_t first = page * page_size;
    for (const auto& [key, e] : records_) {
        const auto& r = e->record;
        if (state && r.state != *state) continue;
        if (visible && !visible(r)) continue;
        if (out.total >= first && out.records.size() < page_size) out.records.push_back(r);
        ++out.total;
    }
    return out;
}

std::map<PairState, std::size_t> Matcher::counts() const {
    std::shared_lock index(index_mutex_);
    auto locks = lock_all(stripes_);
    std::map<PairState, std::size_t> out;
    for (std::size_t i = 0; i < kStateNames.size(); ++i) out[static_cast<PairState>(i)] = 0;
    for (const auto& [key, e] : records_) ++out[e->record.state];
    return out;
}

std::size_t Matcher::size() const {
    std::shared_lock index(index_mutex_);
    return records_.size();
}

OpeningRequest Matcher::request_opening(const PairKey& key, const std::string& auditor_id, bool is_auditor,
                                        Direction target) {
    if (!is_auditor) throw AuthorizationError("only auditors may request openings");
    return apply_request(key, auditor_id, target, clock_(), std::nullopt, true);
}

OpeningRequest Matcher::apply_request(const PairKey& key, const std::string& auditor, Direction target,
                                      Timestamp now, std::optional<std::uint64_t> id, bool log) {
    std::shared_lock index(index_mutex_);
    auto it = records_.find(key);
    if (it == records_.end()) throw NotFoundError("no pair " + key.str());
    std::lock_guard guard(stripe(key));
    PairRecord& r = it->second->record;
    if (r.state != PairState::risk) {
        throw StateError("openings can only be requested for risk pairs; " + key.str() + " is " +
                         std::string(to_string(r.state)));
    }
    OpeningRequest req;
    {
        std::lock_guard rl(requests_mutex_);
        req.id = id ? *id : next_request_id_;
        if (request_index_.count(req.id)) throw ConflictError("duplicate opening request id");
        next_request_id_ = std::max(next_request_id_, req.id + 1);
        request_index_[req.id] = key;
    }
    req.key = key;
    req.auditor_id = auditor;
    req.target = target;
    req.created_at = now;
    r.opening_requests.push_back(req);

    if (log) {
        Bytes p;
        put_u64(p, static_cast<std::uint64_t>(now));
        put_u64(p, req.id);
        protocol::encode(p, key);
        put_var(p, auditor);
        put_u8(p, static_cast<std::uint8_t>(target));
        log_.append(kOpeningRequestTag, p);
    }
    return req;
}

PairRecord Matcher::submit_opening(std::uint64_t request_id, const protocol::OpeningPackage& package) {
    return apply_submit(request_id, package, clock_(), true);
}

PairRecord Matcher::apply_submit(std::uint64_t id, const protocol::OpeningPackage& package, Timestamp now,
                                 bool log) {
    PairKey key;
    {
        std::lock_guard rl(requests_mutex_);
        auto it = request_index_.find(id);
        if (it == request_index_.end()) throw NotFoundError("no opening request " + std::to_string(id));
        key = it->second;
    }
    std::shared_lock index(index_mutex_);
    std::lock_guard guard(stripe(key));
    PairRecord& r = records_.at(key)->record;
    auto req = std::find_if(r.opening_requests.begin(), r.opening_requests.end(),
                            [&](const OpeningRequest& q) { return q.id == id; });
    if (req->status != OpeningStatus::requested) {
        throw StateError("opening request " + std::to_string(id) + " is " + std::string(to_string(req->status)));
    }
    if (package.ref.key != key || package.ref.flag != req->target) {
        throw ValidationError("package refers to a different message than the request");
    }
    const auto& target = r.slots[idx(req->target)];
    if (!target || !protocol::opening_matches(*params_, target->message, package)) {
        throw InvalidOpening("invalid opening: package does not reproduce the posted commitments");
    }
    req->status = OpeningStatus::fulfilled;
    req->package = package;

    // Resolve once each side has a fulfilled opening of its current message.
    std::array<std::optional<std::uint64_t>, 2> amounts;
    for (const auto& q : r.opening_requests) {
        if (q.status != OpeningStatus::fulfilled || !q.package) continue;
        const auto& s = r.slots[idx(q.target)];
        if (s && protocol::opening_matches(*params_, s->message, *q.package)) {
            amounts[idx(q.target)] = q.package->amount;
        }
    }
    if (amounts[0] && amounts[1] && r.state == PairState::risk) {
        transition(r, *amounts[0] == *amounts[1] ? PairState::risk_resolved_verified
                                                 : PairState::risk_confirmed_mismatch,
                   now);
    }
    check_invariants(r);

    if (log) {
        Bytes p;
        put_u64(p, static_cast<std::uint64_t>(now));
        put_u64(p, id);
        protocol::encode(p, *params_, package);
        log_.append(kOpeningSubmitTag, p);
    }
    return r;
}

std::optional<OpeningRequest> Matcher::opening_request(std::uint64_t id) const {
    PairKey key;
    {
        std::lock_guard rl(requests_mutex_);
        auto it = request_index_.find(id);
        if (it == request_index_.end()) return std::nullopt;
        key = it->second;
    }
    auto r = get(key);
    for (const auto& q : r->opening_requests) {
        if (q.id == id) return q;
    }
    return std::nullopt;
}

std::vector<OpeningRequest> Matcher::open_requests_for(const crypto::Address& address) const {
    std::shared_lock index(index_mutex_);
    auto locks = lock_all(stripes_);
    std::vector<OpeningRequest> out;
    for (const auto& [key, e] : records_) {
        for (const auto& q : e->record.opening_requests) {
            const auto& s = e->record.slot(q.target);
            if (q.status == OpeningStatus::requested && s && s->message.signer == address) out.push_back(q);
        }
    }
    return out;
}

std::vector<PairRecord> Matcher::flag_stale_pending(Timestamp age_threshold) {
    return apply_stale(age_threshold, clock_(), true);
}

std::vector<PairRecord> Matcher::apply_stale(Timestamp threshold, Timestamp now, bool log) {
    if (threshold < 0) throw ParameterError("age threshold must be non-negative");
    std::unique_lock index(index_mutex_);
    std::vector<PairRecord> out;
    for (auto& [key, e] : records_) {
        auto& r = e->record;
        if (r.state == PairState::pending && now - r.state_since() >= threshold) {
            r.stale = true;
            out.push_back(r);
        }
    }
    if (log) {
        Bytes p;
        put_u64(p, static_cast<std::uint64_t>(now));
        put_u64(p, static_cast<std::uint64_t>(threshold));
        log_.append(kStaleTag, p);
    }
    return out;
}

FinalizeReceipt Matcher::finalize_verified(std::size_t batch_size, ledger::Ledger& ledger,
                                           const crypto::KeyPair& operator_key) {
    if (batch_size == 0) throw ParameterError("batch size must be positive");
    std::lock_guard fin(finalize_mutex_);
    std::unique_lock index(index_mutex_);

    FinalizeReceipt receipt;
    std::vector<ledger::LedgerRecord> batch;
    for (const auto& [key, e] : records_) {
        if (batch.size() == batch_size) break;
        const auto& r = e->record;
        if (r.ledger_height) continue;
        if (r.state != PairState::verified && r.state != PairState::risk_resolved_verified) continue;
        batch.push_back(ledger::make_record(r.slots[0]->message, r.slots[0]->signer_key, r.slots[1]->message,
                                            r.slots[1]->signer_key, r.state_since(),
                                            r.state == PairState::verified ? ledger::Annotation::clean
                                                                           : ledger::Annotation::risk_resolved));
        receipt.keys.push_back(key);
    }
    if (batch.empty()) return receipt;

    auto signature = crypto::sign(operator_key, ledger::encode_records(*params_, batch));
    auto block = ledger.append_block(std::move(batch), signature);
    receipt.block_height = block.height;
    mark_ledgered(receipt.keys, block.height, clock_(), true);
    return receipt;
}

std::vector<FinalizeReceipt> Matcher::finalize_all(std::size_t batch_size, ledger::Ledger& ledger,
                                                   const crypto::KeyPair& operator_key) {
    std::vector<FinalizeReceipt> out;
    for (;;) {
        auto r = finalize_verified(batch_size, ledger, operator_key);
        if (!r.block_height) break;
        out.push_back(std::move(r));
    }
    return out;
}

void Matcher::apply_ledgered(const std::vector<PairKey>& keys, std::uint64_t height, Timestamp now, bool log) {
    std::unique_lock index(index_mutex_);
    mark_ledgered(keys, height, now, log);
}

void Matcher::mark_ledgered(const std::vector<PairKey>& keys, std::uint64_t height, Timestamp now, bool log) {
    for (const auto& key : keys) {
        auto& r = entry_for(key, false).record;
        if (r.ledger_height) throw ConflictError("pair " + key.str() + " ledgered twice");
        r.ledger_height = height;
        check_invariants(r);
    }
    if (log) {
        Bytes p;
        put_u64(p, static_cast<std::uint64_t>(now));
        put_u64(p, height);
        put_u32(p, static_cast<std::uint32_t>(keys.size()));
        for (const auto& k : keys) protocol::encode(p, k);
        log_.append(kLedgeredTag, p);
    }
}

MatcherStats Matcher::stats() const {
    return {ingested_.load(), rejected_.load(), classify_calls_.load()};
}

crypto::Digest Matcher::state_digest() const {
    std::shared_lock index(index_mutex_);
    auto locks = lock_all(stripes_);
    crypto::Sha256 h;
    Bytes buf;
    for (const auto& [key, e] : records_) {
        const auto& r = e->record;
        buf.clear();
        protocol::encode(buf, key);
        put_u8(buf, static_cast<std::uint8_t>(r.state));
        for (const auto& s : r.slots) {
            put_u8(buf, s ? 1 : 0);
            if (!s) continue;
            protocol::encode(buf, *params_, s->message);
            put_bytes(buf, s->signer_key.bytes());
            put_u64(buf, static_cast<std::uint64_t>(s->received_at));
        }
        put_u32(buf, static_cast<std::uint32_t>(r.history.size()));
        for (const auto& t : r.history) {
            put_u8(buf, static_cast<std::uint8_t>(t.state));
            put_u64(buf, static_cast<std::uint64_t>(t.at));
        }
        put_u32(buf, static_cast<std::uint32_t>(r.opening_requests.size()));
        for (const auto& q : r.opening_requests) {
            put_u64(buf, q.id);
            put_var(buf, q.auditor_id);
            put_u8(buf, static_cast<std::uint8_t>(q.target));
            put_u8(buf, static_cast<std::uint8_t>(q.status));
            put_u64(buf, static_cast<std::uint64_t>(q.created_at));
            put_u8(buf, q.package ? 1 : 0);
            if (q.package) protocol::encode(buf, *params_, *q.package);
        }
        put_u8(buf, r.stale ? 1 : 0);
        put_u64(buf, r.ledger_height ? *r.ledger_height + 1 : 0);
        h.update(buf);
    }
    return h.finish();
}

std::unique_ptr<Matcher> Matcher::replay(const crypto::GroupParams& params, const KeyDirectory& directory,
                                         ByteView log_bytes, Clock clock) {
    auto m = std::make_unique<Matcher>(params, directory, std::move(clock));
    auto events = EventLog::parse(log_bytes);
    for (std::size_t i = 0; i < events.size(); ++i) {
        const auto& ev = events[i];
        try {
            ByteReader in(ev.payload);
            auto now = static_cast<Timestamp>(in.u64());
            if (ev.tag == kIngestTag) {
                auto msg = protocol::decode_message(in, params);
                auto key = crypto::PublicKey::from_bytes(in.take(crypto::PublicKey::kSize));
                in.expect_done();
                if (crypto::derive_address(key) != msg.expected_signer() ||
                    !protocol::verify_message_signature(params, msg, key)) {
                    throw ValidationError("logged message signature does not verify");
                }
                m->apply_ingest(msg, key, now, true);
            } else if (ev.tag == kOpeningRequestTag) {
                auto id = in.u64();
                auto key = protocol::decode_pair_key(in);
                auto auditor = in.var_string(4096);
                auto target = protocol::direction_from_flag(in.u8());
                in.expect_done();
                m->apply_request(key, auditor, target, now, id, true);
            } else if (ev.tag == kOpeningSubmitTag) {
                auto id = in.u64();
                auto package = protocol::decode_opening(in, params);
                in.expect_done();
                m->apply_submit(id, package, now, true);
            } else if (ev.tag == kLedgeredTag) {
                auto height = in.u64();
                auto n = in.u32();
                if (n > in.remaining()) throw DecodeError("key count exceeds record");
                std::vector<PairKey> keys;
                for (std::uint32_t k = 0; k < n; ++k) keys.push_back(protocol::decode_pair_key(in));
                in.expect_done();
                m->apply_ledgered(keys, height, now, true);
            } else if (ev.tag == kStaleTag) {
                auto threshold = static_cast<Timestamp>(in.u64());
                in.expect_done();
                m->apply_stale(threshold, now, true);
            } else {
                throw DecodeError("unknown event tag");
            }
        } catch (const Error& e) {
            throw DecodeError("event " + std::to_string(i) + ": " + e.what());
        }
    }
    return m;
}

}  // namespace abaudit::matcher
