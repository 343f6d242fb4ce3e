#pragma once

#include <array>
#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "abaudit/core/clock.hpp"
#include "abaudit/crypto/hash.hpp"
#include "abaudit/protocol/message.hpp"

namespace abaudit::ledger {

enum class Annotation : std::uint8_t { clean = 0, risk_resolved = 1 };
std::string_view to_string(Annotation a);

// One side's posted message, minus the fields shared through the pair key.
struct SideEvidence {
    crypto::Commitment amount_commitment;
    crypto::Commitment detail_commitment;
    crypto::Signature signature;
    crypto::PublicKey signer_key;
};

struct LedgerRecord {
    protocol::PairKey key;
    std::array<SideEvidence, 2> sides;  // indexed by flag
    Timestamp verified_at = 0;
    Annotation annotation = Annotation::clean;

    protocol::PostedMessage message(protocol::Direction flag) const;
};

LedgerRecord make_record(const protocol::PostedMessage& flag0, const crypto::PublicKey& key0,
                         const protocol::PostedMessage& flag1, const crypto::PublicKey& key1,
                         Timestamp verified_at, Annotation annotation);

// Both signatures verify over their canonical message bytes and each signer
// key hashes to the address its flag designates.
bool verify_record(const crypto::GroupParams& params, const LedgerRecord& record);

// u32 count followed by each record's canonical encoding.
Bytes encode_records(const crypto::GroupParams& params, const std::vector<LedgerRecord>& records);

struct Block {
    std::uint64_t height = 0;
    crypto::Digest previous_hash{};
    std::vector<LedgerRecord> records;
    Timestamp timestamp = 0;
    // Operator signature over encode_records(records); all zero for genesis.
    std::array<std::uint8_t, crypto::Signature::kSize> proposer_signature{};
    crypto::Digest block_hash{};
};

// block_hash = SHA-256(u64 height ‖ previous_hash ‖ record bytes ‖ u64 timestamp).
// For the genesis block the record bytes are the encoded chain header.
crypto::Digest compute_block_hash(std::uint64_t height, const crypto::Digest& previous_hash,
                                  ByteView record_bytes, Timestamp timestamp);

struct ChainCheck {
    bool ok = true;
    std::optional<std::uint64_t> first_bad_height;
    std::string reason;
};

struct RecordLocation {
    LedgerRecord record;
    std::uint64_t height = 0;
    std::size_t index = 0;
};

// Latest block hash countersigned by the operator; lets a verifier notice a
// chain that was cut back.
struct TipAttestation {
    std::uint64_t height = 0;
    crypto::Digest block_hash{};
    crypto::Signature signature;

    Bytes signed_bytes() const;
};

// Single-node, append-only hash chain of verified audit records. Appends are
// serialized; blocks are immutable once written.
class Ledger {
public:
    Ledger(const crypto::GroupParams& params, crypto::PublicKey operator_key, Clock clock = system_clock(),
           std::string chain_label = "abaudit-ledger");

    Ledger(Ledger&&) noexcept;
    Ledger& operator=(Ledger&&) noexcept;
    ~Ledger();

    // Atomic: an empty batch, an invalid record signature, a bad proposer
    // signature or an already-ledgered pair key rejects the whole batch.
    Block append_block(std::vector<LedgerRecord> records, const crypto::Signature& proposer_signature);

    std::uint64_t height() const;
    Block block(std::uint64_t height) const;
    crypto::Digest tip_hash() const;
    const crypto::PublicKey& operator_key() const { return operator_key_; }
    const crypto::GroupParams& group() const { return *params_; }
    std::size_t record_count() const;

    std::optional<RecordLocation> get_record(const protocol::PairKey& key) const;

    ChainCheck verify_chain() const;
    ChainCheck verify_chain(const TipAttestation& attestation) const;
    TipAttestation attest_tip(const crypto::KeyPair& operator_key) const;

    // "ABL1" | u32 version | var(header) | { u32 length | block }*
    Bytes serialize() const;
    // Throws DecodeError unless the bytes form a fully valid chain.
    static Ledger deserialize(const crypto::GroupParams& params, ByteView bytes, Clock clock = system_clock());
    // Parses as far as possible and reports the first height that fails to
    // parse or verify. Header damage reports height 0.
    static ChainCheck verify_bytes(const crypto::GroupParams& params, ByteView bytes);

    void save(const std::filesystem::path& path) const;
    static Ledger load(const crypto::GroupParams& params, const std::filesystem::path& path,
                       Clock clock = system_clock());

    // Test hook: direct access to stored blocks to simulate storage tampering.
    std::deque<Block>& mutable_blocks_for_testing() { return blocks_; }

private:
    Ledger(const crypto::GroupParams& params, crypto::PublicKey operator_key, Clock clock,
           std::string chain_label, bool with_genesis);

    Bytes header_bytes() const;
    ChainCheck verify_locked() const;

    const crypto::GroupParams* params_;
    crypto::PublicKey operator_key_;
    Clock clock_;
    std::string chain_label_;
    std::deque<Block> blocks_;
    std::map<protocol::PairKey, std::pair<std::uint64_t, std::size_t>> index_;
    std::unique_ptr<std::shared_mutex> mutex_;
};

}  // namespace abaudit::ledger
