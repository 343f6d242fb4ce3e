#pragma once

#include <array>
#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "abaudit/core/clock.hpp"
#include "abaudit/ledger/ledger.hpp"
#include "abaudit/matcher/event_log.hpp"
#include "abaudit/protocol/message.hpp"

namespace abaudit::matcher {

using protocol::Direction;
using protocol::PairKey;
using protocol::PostedMessage;

enum class PairState : std::uint8_t {
    pending = 0,
    verified = 1,
    risk = 2,
    risk_resolved_verified = 3,
    risk_confirmed_mismatch = 4,
};
std::string_view to_string(PairState s);
// Accepts the names produced by to_string; throws ValidationError otherwise.
PairState parse_pair_state(std::string_view text);

enum class OpeningStatus : std::uint8_t { requested = 0, fulfilled = 1, refused = 2 };
std::string_view to_string(OpeningStatus s);

// Resolves the signing key registered for an address.
class KeyDirectory {
public:
    virtual ~KeyDirectory() = default;
    virtual std::optional<crypto::PublicKey> key_for(const crypto::Address& address) const = 0;
};

class StaticKeyDirectory : public KeyDirectory {
public:
    void add(const crypto::PublicKey& key);
    std::optional<crypto::PublicKey> key_for(const crypto::Address& address) const override;

private:
    mutable std::shared_mutex mutex_;
    std::unordered_map<crypto::Address, crypto::PublicKey, crypto::AddressHash> keys_;
};

struct Slot {
    PostedMessage message;
    crypto::PublicKey signer_key;
    Timestamp received_at = 0;
};

struct Transition {
    PairState state;
    Timestamp at = 0;
};

struct OpeningRequest {
    std::uint64_t id = 0;
    PairKey key;
    std::string auditor_id;
    Direction target = Direction::outgoing;
    OpeningStatus status = OpeningStatus::requested;
    std::optional<protocol::OpeningPackage> package;
    Timestamp created_at = 0;
};

struct PairRecord {
    PairKey key;
    std::array<std::optional<Slot>, 2> slots;  // indexed by flag
    PairState state = PairState::pending;
    std::vector<Transition> history;
    std::vector<OpeningRequest> opening_requests;
    bool stale = false;
    std::optional<std::uint64_t> ledger_height;

    const std::optional<Slot>& slot(Direction flag) const { return slots[static_cast<std::size_t>(flag)]; }
    Timestamp state_since() const { return history.empty() ? 0 : history.back().at; }
};

// Pure classification of the two slots. Throws StateError when both are empty.
PairState classify(const std::array<std::optional<Slot>, 2>& slots);

struct Page {
    std::vector<PairRecord> records;
    std::size_t total = 0;  // matching records across all pages
};

struct FinalizeReceipt {
    std::optional<std::uint64_t> block_height;  // empty when nothing was eligible
    std::vector<PairKey> keys;
};

struct IngestResult {
    PairState state = PairState::pending;
    bool changed = false;  // false for an identical re-post
};

struct MatcherStats {
    std::uint64_t ingested = 0;
    std::uint64_t rejected = 0;
    std::uint64_t classify_calls = 0;
};

// Pairs posted messages by key and tracks each pair's state. Ingest and
// transitions on one key are serialized; different keys may proceed in
// parallel. Every accepted mutation is appended to the event log, so the
// state can be rebuilt with replay().
class Matcher {
public:
    Matcher(const crypto::GroupParams& params, const KeyDirectory& directory, Clock clock = system_clock());
    ~Matcher();

    // Rejects with AuthorizationError("unregistered party") for unknown
    // addresses, ValidationError for orientation or signature problems and
    // ConflictError once the pair is on the ledger.
    IngestResult ingest(const PostedMessage& message);

    std::optional<PairRecord> get(const PairKey& key) const;
    // Deterministic PairKey order; page is zero-based.
    Page list_by_state(std::optional<PairState> state, std::size_t page, std::size_t page_size,
                       const std::function<bool(const PairRecord&)>& visible = {}) const;
    std::map<PairState, std::size_t> counts() const;
    std::size_t size() const;

    // Auditor-initiated; the caller's role is checked by the service layer
    // and passed in as is_auditor.
    OpeningRequest request_opening(const PairKey& key, const std::string& auditor_id, bool is_auditor,
                                   Direction target);
    // Throws InvalidOpening when the package does not open the target message.
    PairRecord submit_opening(std::uint64_t request_id, const protocol::OpeningPackage& package);
    std::optional<OpeningRequest> opening_request(std::uint64_t id) const;
    // Open requests whose target message was signed by `address`.
    std::vector<OpeningRequest> open_requests_for(const crypto::Address& address) const;

    std::vector<PairRecord> flag_stale_pending(Timestamp age_threshold = 7 * 86400);

    FinalizeReceipt finalize_verified(std::size_t batch_size, ledger::Ledger& ledger,
                                      const crypto::KeyPair& operator_key);
    std::vector<FinalizeReceipt> finalize_all(std::size_t batch_size, ledger::Ledger& ledger,
                                              const crypto::KeyPair& operator_key);

    MatcherStats stats() const;
    const EventLog& log() const { return log_; }
    // Mirrors every future event to a file as well.
    void attach_log_file(const std::filesystem::path& path) { log_.attach_file(path); }
    // SHA-256 over a canonical encoding of every record.
    crypto::Digest state_digest() const;

    // Folds an event log into a fresh matcher. Registry membership is not
    // consulted again; signatures are.
    static std::unique_ptr<Matcher> replay(const crypto::GroupParams& params, const KeyDirectory& directory,
                                           ByteView log_bytes, Clock clock = system_clock());

private:
    struct Entry;

    Entry& entry_for(const PairKey& key, bool create);
    const Entry* find_entry(const PairKey& key) const;
    std::mutex& stripe(const PairKey& key) const;

    IngestResult apply_ingest(const PostedMessage& m, const crypto::PublicKey& key, Timestamp now, bool log);
    OpeningRequest apply_request(const PairKey& key, const std::string& auditor, Direction target,
                                 Timestamp now, std::optional<std::uint64_t> id, bool log);
    PairRecord apply_submit(std::uint64_t id, const protocol::OpeningPackage& package, Timestamp now, bool log);
    void apply_ledgered(const std::vector<PairKey>& keys, std::uint64_t height, Timestamp now, bool log);
    // Caller holds index_mutex_ exclusively.
    void mark_ledgered(const std::vector<PairKey>& keys, std::uint64_t height, Timestamp now, bool log);
    std::vector<PairRecord> apply_stale(Timestamp threshold, Timestamp now, bool log);

    void transition(PairRecord& r, PairState next, Timestamp now);
    void check_invariants(const PairRecord& r) const;

    const crypto::GroupParams* params_;
    const KeyDirectory* directory_;
    Clock clock_;
    EventLog log_;

    mutable std::shared_mutex index_mutex_;
    std::map<PairKey, std::unique_ptr<Entry>> records_;
    mutable std::array<std::mutex, 64> stripes_;
    mutable std::mutex requests_mutex_;
    std::map<std::uint64_t, PairKey> request_index_;
    std::uint64_t next_request_id_ = 1;
    std::mutex finalize_mutex_;

    std::atomic<std::uint64_t> ingested_{0};
    std::atomic<std::uint64_t> rejected_{0};
    mutable std::atomic<std::uint64_t> classify_calls_{0};
};

}  // namespace abaudit::matcher
