#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <vector>

#include "abaudit/core/clock.hpp"
#include "abaudit/crypto/random.hpp"
#include "abaudit/protocol/message.hpp"

namespace abaudit::wallet {

using protocol::CompanyId;
using protocol::Direction;

// Companies known to the platform, plus the gallery that groups them into
// categories for batch selection.
struct CompanyDirectory {
    std::set<CompanyId> companies;
    std::map<std::string, std::vector<CompanyId>> gallery;

    bool contains(const CompanyId& id) const { return companies.count(id) != 0; }
};

struct Selection {
    std::vector<CompanyId> companies;
    std::vector<std::string> categories;
};

enum class ValueSetStatus { awaiting_counterparty, active, retired };
std::string_view to_string(ValueSetStatus s);

// One relationship row: what this company uses to post about transactions
// with one counterparty.
struct ValueSet {
    std::uint64_t id = 0;
    Timestamp created_at = 0;
    CompanyId counterparty_id;
    crypto::Address own_address;
    std::optional<crypto::Address> counterparty_address;
    crypto::CommitmentSecret shared_secret{};
    crypto::KeyPair signing_key;
    ValueSetStatus status = ValueSetStatus::awaiting_counterparty;
};

// Wallet-to-wallet synchronization payload. `address` is carried in text
// form and validated on receipt. A notification without `in_reply_to`
// announces a new set; with it, it confirms the recipient's awaiting set.
struct Notification {
    CompanyId from;
    CompanyId to;
    std::string address;
    crypto::CommitmentSecret shared_secret{};
    std::optional<crypto::Address> in_reply_to;
};

struct StagedTransaction {
    CompanyId counterparty_id;
    Direction direction = Direction::outgoing;
    std::int64_t amount = 0;  // minor units
    Date date;
    std::string details;
};

struct JournalEntry {
    std::uint64_t id = 0;
    StagedTransaction tx;
};

struct BuildError {
    CompanyId counterparty_id;
    Direction direction;
    std::string reason;
};

struct BuildResult {
    std::vector<protocol::PostedMessage> messages;
    std::vector<BuildError> errors;
};

struct RowError {
    std::size_t line = 0;  // 1-based; the header is line 1
    std::string reason;
};

struct ImportResult {
    std::size_t accepted = 0;
    std::vector<RowError> rejected;
};

// ABWallet: value-set management, staging, daily aggregation into signed
// commitment messages, and commitment openings. Mutations are serialized;
// const queries may run concurrently with each other.
class Wallet {
public:
    struct Context {
        const crypto::GroupParams* group = nullptr;
        std::shared_ptr<crypto::RandomSource> rng;
        Clock clock;
        CompanyDirectory directory;
    };

    // Creates one awaiting value set per selected counterparty (categories
    // expand through the gallery; duplicates and self are dropped) and
    // queues a notification for each. Unknown company ids are rejected with
    // a ValidationError naming every offender.
    static Wallet init(CompanyId self, const Selection& selection, Context context);

    Wallet(Wallet&&) noexcept;
    Wallet& operator=(Wallet&&) noexcept;
    ~Wallet();

    const CompanyId& company_id() const { return self_; }
    const crypto::GroupParams& group() const { return *ctx_.group; }

    ValueSet receive_counterparty_values(const Notification& note);
    ValueSet rotate_value_set(const CompanyId& counterparty);

    std::uint64_t stage_transaction(StagedTransaction tx);
    BuildResult build_daily_messages(const Date& date);
    // CSV with the exact header `counterparty_id,direction,amount_minor,date,details`.
    // Structural problems throw ValidationError naming the first bad line;
    // invalid values reject only their row.
    ImportResult bulk_import(std::string_view csv);

    // Throws NotFoundError unless this wallet built the referenced message.
    protocol::OpeningPackage produce_opening(const protocol::MessageRef& ref) const;

    // Drains queued outbound notifications.
    std::vector<Notification> take_outbox();

    std::vector<ValueSet> value_sets() const;
    std::vector<ValueSet> value_sets_for(const CompanyId& counterparty) const;
    std::optional<ValueSet> active_set(const CompanyId& counterparty) const;
    std::vector<JournalEntry> journal() const;
    std::size_t journal_size() const;
    std::size_t outbox_size() const;
    // Every own address with its public key, for registration with the node.
    std::vector<std::pair<crypto::Address, crypto::PublicKey>> own_keys() const;

    // Encrypted "ABW1" container. Load throws DecodeError on a damaged or
    // foreign file and AuthorizationError on a wrong passphrase.
    void save(const std::filesystem::path& path, std::string_view passphrase) const;
    static Wallet load(const std::filesystem::path& path, std::string_view passphrase, Context context);

    Bytes serialize() const;
    static Wallet deserialize(ByteView bytes, Context context);

private:
    struct Opening {
        std::uint64_t amount = 0;
        crypto::Scalar amount_randomness;
        std::vector<std::string> details;
        crypto::Scalar detail_randomness;
    };

    Wallet(CompanyId self, Context context);

    ValueSet& new_value_set(const CompanyId& counterparty);
    ValueSet* find_set(const CompanyId& counterparty, ValueSetStatus status);
    const ValueSet* find_set(const CompanyId& counterparty, ValueSetStatus status) const;
    void announce(const ValueSet& set, std::optional<crypto::Address> in_reply_to);
    void activate(ValueSet& set, const crypto::Address& their_address,
                  const crypto::CommitmentSecret& their_secret);
    std::uint64_t stage_locked(StagedTransaction tx);

    CompanyId self_;
    Context ctx_;
    std::vector<ValueSet> sets_;
    std::vector<JournalEntry> journal_;
    std::map<protocol::MessageRef, Opening> openings_;
    std::vector<Notification> outbox_;
    std::uint64_t next_set_id_ = 1;
    std::uint64_t next_entry_id_ = 1;
    std::unique_ptr<std::shared_mutex> mutex_;
};

}  // namespace abaudit::wallet
