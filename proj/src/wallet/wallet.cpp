#include "abaudit/wallet/wallet.hpp"

#include <algorithm>
#include <mutex>
#include <tuple>

#include "abaudit/core/errors.hpp"

namespace abaudit::wallet {

using crypto::Address;
using crypto::CommitmentSecret;
using protocol::MessageRef;
using protocol::PostedMessage;

std::string_view to_string(ValueSetStatus s) {
    switch (s) {
        case ValueSetStatus::awaiting_counterparty: return "awaiting_counterparty";
        case ValueSetStatus::active: return "active";
        case ValueSetStatus::retired: return "retired";
    }
    return "unknown";
}

Wallet::Wallet(CompanyId self, Context context)
    : self_(std::move(self)), ctx_(std::move(context)), mutex_(std::make_unique<std::shared_mutex>()) {
    if (ctx_.group == nullptr) throw ParameterError("wallet requires group parameters");
    if (!ctx_.rng) ctx_.rng = std::make_shared<crypto::SystemRandom>();
    if (!ctx_.clock) ctx_.clock = system_clock();
}

Wallet::Wallet(Wallet&&) noexcept = default;
Wallet& Wallet::operator=(Wallet&&) noexcept = default;
Wallet::~Wallet() = default;

Wallet Wallet::init(CompanyId self, const Selection& selection, Context context) {
    std::vector<CompanyId> wanted = selection.companies;
    std::vector<std::string> unknown;
    for (const auto& category : selection.categories) {
        auto it = context.directory.gallery.find(category);
        if (it == context.directory.gallery.end()) {
            unknown.push_back("category:" + category);
            continue;
        }
        wanted.insert(wanted.end(), it->second.begin(), it->second.end());
    }
    for (const auto& id : wanted) {
        if (!context.directory.contains(id)) unknown.push_back(id);
    }
    if (!unknown.empty()) {
        std::string msg = "unknown company ids:";
        for (const auto& u : unknown) msg += " " + u;
        throw ValidationError(msg);
    }

    Wallet w(std::move(self), std::move(context));
    std::set<CompanyId> seen;
    for (const auto& id : wanted) {
        if (id == w.self_ || !seen.insert(id).second) continue;
        auto& set = w.new_value_set(id);
        w.announce(set, std::nullopt);
    }
    return w;
}

ValueSet& Wallet::new_value_set(const CompanyId& counterparty) {
    ValueSet set;
    set.id = next_set_id_++;
    set.created_at = ctx_.clock();
    set.counterparty_id = counterparty;
    set.signing_key = crypto::KeyPair::generate(*ctx_.rng);
    set.own_address = crypto::derive_address(set.signing_key.public_key());
    ctx_.rng->fill(set.shared_secret);
    set.status = ValueSetStatus::awaiting_counterparty;
    sets_.push_back(std::move(set));
    return sets_.back();
}

ValueSet* Wallet::find_set(const CompanyId& counterparty, ValueSetStatus status) {
    for (auto& s : sets_) {
        if (s.counterparty_id == counterparty && s.status == status) return &s;
    }
    return nullptr;
}

const ValueSet* Wallet::find_set(const CompanyId& counterparty, ValueSetStatus status) const {
    return const_cast<Wallet*>(this)->find_set(counterparty, status);
}

void Wallet::announce(const ValueSet& set, std::optional<Address> in_reply_to) {
    outbox_.push_back(Notification{self_, set.counterparty_id, set.own_address.str(), set.shared_secret,
                                   in_reply_to});
}

void Wallet::activate(ValueSet& set, const Address& their_address, const CommitmentSecret& their_secret) {
    if (auto* current = find_set(set.counterparty_id, ValueSetStatus::active); current && current != &set) {
        current->status = ValueSetStatus::retired;
    }
    set.counterparty_address = their_address;
    // Both sides apply the same rule, so sets announced concurrently by the
    // two parties still settle on one secret.
    set.shared_secret = std::min(set.shared_secret, their_secret);
    set.status = ValueSetStatus::active;
}

ValueSet Wallet::receive_counterparty_values(const Notification& note) {
    std::unique_lock lock(*mutex_);
    if (note.to != self_) throw ValidationError("notification addressed to " + note.to);
    const Address their = Address::parse(note.address);
    if (!ctx_.directory.contains(note.from)) throw ValidationError("unknown company id: " + note.from);

    ValueSet* awaiting = find_set(note.from, ValueSetStatus::awaiting_counterparty);
    if (note.in_reply_to) {
        if (awaiting == nullptr || awaiting->own_address != *note.in_reply_to) {
            throw StateError("confirmation does not match an awaiting value set");
        }
        activate(*awaiting, their, note.shared_secret);
        return *awaiting;
    }
    if (awaiting != nullptr) {
        // Both sides announced; our own announcement is already in flight.
        activate(*awaiting, their, note.shared_secret);
        return *awaiting;
    }
    auto& fresh = new_value_set(note.from);
    fresh.shared_secret = note.shared_secret;
    activate(fresh, their, note.shared_secret);
    announce(fresh, their);
    return fresh;
}

ValueSet Wallet::rotate_value_set(const CompanyId& counterparty) {
    std::unique_lock lock(*mutex_);
    if (find_set(counterparty, ValueSetStatus::active) == nullptr) {
        throw StateError("no active value set for " + counterparty);
    }
    std::erase_if(sets_, [&](const ValueSet& s) {
        return s.counterparty_id == counterparty && s.status == ValueSetStatus::awaiting_counterparty;
    });
    auto& set = new_value_set(counterparty);
    announce(set, std::nullopt);
    return set;
}

std::uint64_t Wallet::stage_locked(StagedTransaction tx) {
    if (tx.amount < 0) throw ValidationError("amount must be non-negative");
    if (static_cast<std::uint64_t>(tx.amount) > protocol::kMaxAmount) {
        throw ValidationError("amount exceeds 2^53 - 1 minor units");
    }
    if (tx.counterparty_id == self_) throw ValidationError("cannot transact with self");
    if (!ctx_.directory.contains(tx.counterparty_id)) {
        throw ValidationError("unknown company id: " + tx.counterparty_id);
    }
    const bool known = std::any_of(sets_.begin(), sets_.end(), [&](const ValueSet& s) {
        return s.counterparty_id == tx.counterparty_id && s.status != ValueSetStatus::retired;
    });
    if (!known) {
        auto& set = new_value_set(tx.counterparty_id);
        announce(set, std::nullopt);
    }
    auto id = next_entry_id_++;
    journal_.push_back(JournalEntry{id, std::move(tx)});
    return id;
}

std::uint64_t Wallet::stage_transaction(StagedTransaction tx) {
    std::unique_lock lock(*mutex_);
    return stage_locked(std::move(tx));
}

BuildResult Wallet::build_daily_messages(const Date& date) {
    std::unique_lock lock(*mutex_);
    struct Aggregate {
        std::uint64_t amount = 0;
        std::vector<std::string> details;
        bool overflow = false;
    };
    std::map<std::pair<CompanyId, Direction>, Aggregate> buckets;
    for (const auto& entry : journal_) {
        if (entry.tx.date != date) continue;
        auto& agg = buckets[{entry.tx.counterparty_id, entry.tx.direction}];
        agg.amount += static_cast<std::uint64_t>(entry.tx.amount);
        if (agg.amount > protocol::kMaxAmount) agg.overflow = true;
        agg.details.push_back(entry.tx.details);
    }

    const auto& gp = *ctx_.group;
    BuildResult result;
    for (const auto& [bucket, agg] : buckets) {
        const auto& [counterparty, direction] = bucket;
        const ValueSet* set = find_set(counterparty, ValueSetStatus::active);
        if (set == nullptr) {
            result.errors.push_back({counterparty, direction, "no active value set"});
            continue;
        }
        if (agg.overflow) {
            result.errors.push_back({counterparty, direction, "daily total exceeds 2^53 - 1"});
            continue;
        }
        Opening opening;
        opening.amount = agg.amount;
        opening.amount_randomness = crypto::derive_randomness(gp, set->shared_secret, date, crypto::kAmountSlot);
        opening.details = agg.details;
        opening.detail_randomness = crypto::derive_randomness(gp, set->shared_secret, date, crypto::kDetailSlot);

        PostedMessage m;
        const bool outgoing = direction == Direction::outgoing;
        m.sender = outgoing ? set->own_address : *set->counterparty_address;
        m.receiver = outgoing ? *set->counterparty_address : set->own_address;
        m.amount_commitment = crypto::commit(gp, crypto::Scalar::from_u64(opening.amount), opening.amount_randomness);
        m.detail_commitment = crypto::commit(gp, protocol::detail_scalar(gp, opening.details), opening.detail_randomness);
        m.date = date;
        m.flag = direction;
        m.signer = set->own_address;
        m.signature = crypto::sign(set->signing_key, protocol::canonical_message_bytes(gp, m));

        openings_[m.ref()] = std::move(opening);
        result.messages.push_back(std::move(m));
    }
    return result;
}

protocol::OpeningPackage Wallet::produce_opening(const MessageRef& ref) const {
    std::shared_lock lock(*mutex_);
    auto it = openings_.find(ref);
    if (it == openings_.end()) throw NotFoundError("no message built for " + ref.key.str());
    const auto& o = it->second;
    return protocol::OpeningPackage{ref, o.amount, o.amount_randomness, o.details, o.detail_randomness};
}

std::vector<Notification> Wallet::take_outbox() {
    std::unique_lock lock(*mutex_);
    return std::exchange(outbox_, {});
}

std::vector<ValueSet> Wallet::value_sets() const {
    std::shared_lock lock(*mutex_);
    return sets_;
}

std::vector<ValueSet> Wallet::value_sets_for(const CompanyId& counterparty) const {
    std::shared_lock lock(*mutex_);
    std::vector<ValueSet> out;
    std::copy_if(sets_.begin(), sets_.end(), std::back_inserter(out),
                 [&](const ValueSet& s) { return s.counterparty_id == counterparty; });
    return out;
}

std::optional<ValueSet> Wallet::active_set(const CompanyId& counterparty) const {
    std::shared_lock lock(*mutex_);
    if (const auto* s = find_set(counterparty, ValueSetStatus::active)) return *s;
    return std::nullopt;
}

std::vector<JournalEntry> Wallet::journal() const {
    std::shared_lock lock(*mutex_);
    return journal_;
}

std::size_t Wallet::journal_size() const {
    std::shared_lock lock(*mutex_);
    return journal_.size();
}

std::size_t Wallet::outbox_size() const {
    std::shared_lock lock(*mutex_);
    return outbox_.size();
}

std::vector<std::pair<Address, crypto::PublicKey>> Wallet::own_keys() const {
    std::shared_lock lock(*mutex_);
    std::vector<std::pair<Address, crypto::PublicKey>> out;
    for (const auto& s : sets_) out.emplace_back(s.own_address, s.signing_key.public_key());
    return out;
}

}  // namespace abaudit::wallet
