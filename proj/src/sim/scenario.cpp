#include "abaudit/sim/scenario.hpp"

#include <chrono>
#include <cstdio>
#include <memory>
#include <set>
#include <tuple>

#include "abaudit/core/errors.hpp"
#include "abaudit/protocol/json_util.hpp"
#include "abaudit/service/node_service.hpp"
#include "abaudit/wallet/courier.hpp"
#include "abaudit/wallet/wallet.hpp"

namespace abaudit::sim {

using nlohmann::json;
using protocol::Direction;

namespace {

using SteadyClock = std::chrono::steady_clock;

double seconds_since(SteadyClock::time_point t0) {
    return std::chrono::duration<double>(SteadyClock::now() - t0).count();
}

json timing_json(const PhaseTiming& t) {
    return {{"total_seconds", t.total_seconds}, {"items", t.items}, {"mean_seconds", t.mean_seconds()}};
}

json counts_json(const StateCounts& c) {
    return {{"verified", c.verified}, {"risk", c.risk}, {"pending", c.pending}};
}

std::string company_name(std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "co-%03zu", i);
    return buf;
}

struct Transaction {
    std::size_t seller;
    std::size_t buyer;
    std::size_t day;
    std::int64_t amount;
};

enum class Fault { none, omission, mismatch };

}  // namespace

void ScenarioConfig::validate() const {
    if (n_companies < 2) throw ParameterError("need at least two companies");
    if (counterparties_per_company == 0) throw ParameterError("counterparties_per_company must be positive");
    if (counterparties_per_company > n_companies - 1) {
        throw ParameterError("counterparties_per_company exceeds the number of other companies");
    }
    if (!(mismatch_rate >= 0 && mismatch_rate <= 1) || !(omission_rate >= 0 && omission_rate <= 1)) {
        throw ParameterError("rates must lie in [0, 1]");
    }
    if (mismatch_rate + omission_rate > 1) throw ParameterError("mismatch_rate + omission_rate exceeds 1");
    if (days == 0) throw ParameterError("days must be positive");
    if (batch_size == 0) throw ParameterError("batch_size must be positive");
}

ScenarioConfig scenario_from_json(const json& j) {
    if (!j.is_object()) throw ValidationError("scenario config must be a JSON object");
    static const std::set<std::string> known{"n_companies",   "counterparties_per_company", "n_transactions",
                                             "mismatch_rate", "omission_rate",              "seed",
                                             "start_date",    "days",                       "group",
                                             "batch_size"};
    for (const auto& [k, v] : j.items()) {
        if (!known.count(k)) throw ValidationError("unknown config key: " + k);
    }
    using protocol::json_get_or;
    ScenarioConfig c;
    c.n_companies = json_get_or<std::size_t>(j, "n_companies", c.n_companies);
    c.counterparties_per_company = json_get_or<std::size_t>(j, "counterparties_per_company", c.counterparties_per_company);
    c.n_transactions = json_get_or<std::size_t>(j, "n_transactions", c.n_transactions);
    c.mismatch_rate = json_get_or<double>(j, "mismatch_rate", c.mismatch_rate);
    c.omission_rate = json_get_or<double>(j, "omission_rate", c.omission_rate);
    c.seed = json_get_or<std::uint64_t>(j, "seed", c.seed);
    c.start_date = Date::parse_iso(json_get_or<std::string>(j, "start_date", c.start_date.iso()));
    c.days = json_get_or<std::size_t>(j, "days", c.days);
    c.group = crypto::parse_security_level(json_get_or<std::string>(j, "group", std::string(to_string(c.group))));
    c.batch_size = json_get_or<std::size_t>(j, "batch_size", c.batch_size);
    c.validate();
    return c;
}

json to_json(const ScenarioConfig& c) {
    return {{"n_companies", c.n_companies},
            {"counterparties_per_company", c.counterparties_per_company},
            {"n_transactions", c.n_transactions},
            {"mismatch_rate", c.mismatch_rate},
            {"omission_rate", c.omission_rate},
            {"seed", c.seed},
            {"start_date", c.start_date.iso()},
            {"days", c.days},
            {"group", to_string(c.group)},
            {"batch_size", c.batch_size}};
}

json to_json(const ScenarioReport& r) {
    return {{"config", to_json(r.config)},
            {"value_sets", r.value_sets},
            {"distinct_keys", r.distinct_keys},
            {"messages_posted", r.messages_posted},
            {"injected", {{"omissions", r.omissions}, {"mismatches", r.mismatches}}},
            {"expected", counts_json(r.expected)},
            {"observed", counts_json(r.observed)},
            {"ledger", {{"records", r.ledger_records}, {"height", r.ledger_height}, {"tip_hash", r.tip_hash},
                        {"chain_ok", r.chain_ok}}},
            {"timing",
             {{"value_set_setup", timing_json(r.setup)},
              {"encryption_signing", timing_json(r.encryption)},
              {"posting_verification", timing_json(r.posting)},
              {"finalize", timing_json(r.finalize)}}},
            {"machine", to_json(r.machine)},
            {"accounting_ok", r.accounting_ok()},
            {"failures", r.failures}};
}

ScenarioReport run_scenario(const ScenarioConfig& config) {
    config.validate();
    ScenarioReport report;
    report.config = config;
    report.machine = describe_machine();
    const auto& gp = crypto::setup_group(config.group);
    auto clock = logical_clock(1'704'067'200);
    crypto::SeededRandom master(config.seed);
    const std::size_t n = config.n_companies;
    const std::size_t k = config.counterparties_per_company;

    wallet::CompanyDirectory directory;
    for (std::size_t i = 0; i < n; ++i) directory.companies.insert(company_name(i));

    // Value sets: company i selects the next k companies around the ring.
    auto t0 = SteadyClock::now();
    std::vector<wallet::Wallet> wallets;
    wallets.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        wallet::Selection sel;
        for (std::size_t d = 1; d <= k; ++d) sel.companies.push_back(company_name((i + d) % n));
        auto rng = std::make_shared<crypto::SeededRandom>(master.next_u64());
        wallets.push_back(wallet::Wallet::init(company_name(i), sel, {&gp, rng, clock, directory}));
    }
    std::map<protocol::CompanyId, wallet::Wallet*> by_id;
    for (auto& w : wallets) by_id[w.company_id()] = &w;
    wallet::deliver_all(by_id);
    report.setup.total_seconds = seconds_since(t0);
    for (const auto& w : wallets) report.value_sets += w.value_sets().size();
    report.setup.items = report.value_sets;

    // Permissioning: every company is granted and registers its addresses.
    service::NodeService node(gp, crypto::KeyPair::generate(master), {}, clock);
    auto committee_key = crypto::KeyPair::generate(master);
    auto operator_key = crypto::KeyPair::generate(master);
    node.bootstrap("committee", service::Role::committee, committee_key.public_key());
    node.bootstrap("operator", service::Role::operator_, operator_key.public_key());
    service::ServiceClient committee("committee", committee_key, service::in_process(node));
    service::ServiceClient operator_client("operator", operator_key, service::in_process(node));
    std::vector<std::unique_ptr<service::ServiceClient>> clients;
    for (std::size_t i = 0; i < n; ++i) {
        auto key = crypto::KeyPair::generate(master);
        clients.push_back(std::make_unique<service::ServiceClient>(company_name(i), key, service::in_process(node)));
        clients.back()->result("request-access", {{"role", "company"}, {"auth_key", key.public_key().hex()}});
        committee.result("grant-access", {{"participant", company_name(i)}});
        for (const auto& set : wallets[i].value_sets()) {
            auto proof = crypto::sign(set.signing_key, service::address_proof_bytes(company_name(i), set.own_address));
            clients.back()->result("register-address", {{"address", set.own_address.str()},
                                                       {"public_key", set.signing_key.public_key().hex()},
                                                       {"proof", proof.hex()}});
        }
    }

    // Transactions and the per-key fault plan.
    std::vector<Transaction> txs;
    txs.reserve(config.n_transactions);
    std::map<std::tuple<std::size_t, std::size_t, std::size_t>, std::vector<std::size_t>> keys;
    for (std::size_t t = 0; t < config.n_transactions; ++t) {
        Transaction tx;
        tx.seller = master.uniform(n);
        tx.buyer = (tx.seller + 1 + master.uniform(k)) % n;
        tx.day = master.uniform(config.days);
        tx.amount = static_cast<std::int64_t>(1 + master.uniform(1'000'000));
        keys[{tx.seller, tx.buyer, tx.day}].push_back(t);
        txs.push_back(tx);
    }
    for (const auto& [key, members] : keys) {
        double u = master.unit();
        Fault fault = u < config.omission_rate                          ? Fault::omission
                      : u < config.omission_rate + config.mismatch_rate ? Fault::mismatch
                                                                        : Fault::none;
        bool flip_seller = master.uniform(2) == 0;
        auto delta = static_cast<std::int64_t>(1 + master.uniform(999));
        if (fault == Fault::omission) ++report.omissions;
        if (fault == Fault::mismatch) ++report.mismatches;
        for (std::size_t m = 0; m < members.size(); ++m) {
            const auto& tx = txs[members[m]];
            Date date = config.start_date.plus_days(static_cast<std::int64_t>(tx.day));
            std::string details = "tx-" + std::to_string(members[m]);
            bool flip = fault == Fault::mismatch && m == 0;
            wallets[tx.seller].stage_transaction({company_name(tx.buyer), Direction::outgoing,
                                                  tx.amount + (flip && flip_seller ? delta : 0), date, details});
            if (fault == Fault::omission) continue;
            wallets[tx.buyer].stage_transaction({company_name(tx.seller), Direction::incoming,
                                                 tx.amount + (flip && !flip_seller ? delta : 0), date, details});
        }
    }
    report.distinct_keys = keys.size();
    report.expected.pending = report.omissions;
    report.expected.risk = report.mismatches;
    report.expected.verified = keys.size() - report.omissions - report.mismatches;

    // Daily aggregation, commitment and signing.
    std::vector<std::pair<std::size_t, protocol::PostedMessage>> outbox;
    t0 = SteadyClock::now();
    for (std::size_t d = 0; d < config.days; ++d) {
        Date date = config.start_date.plus_days(static_cast<std::int64_t>(d));
        for (std::size_t i = 0; i < n; ++i) {
            auto built = wallets[i].build_daily_messages(date);
            for (const auto& e : built.errors) {
                report.failures.push_back(company_name(i) + " could not build for " + e.counterparty_id + ": " + e.reason);
            }
            for (auto& m : built.messages) outbox.emplace_back(i, std::move(m));
        }
    }
    report.encryption.total_seconds = seconds_since(t0);
    report.encryption.items = outbox.size();

    // Posting through the service: envelope check, registry, signature and matching.
    t0 = SteadyClock::now();
    for (const auto& [owner, m] : outbox) {
        auto res = clients[owner]->call("post-message", {{"message", protocol::to_json(gp, m)}});
        if (!res.value("ok", false)) {
            report.failures.push_back("post by " + company_name(owner) + " rejected: " + res["error"].dump());
        } else {
            ++report.messages_posted;
        }
    }
    report.posting.total_seconds = seconds_since(t0);
    report.posting.items = outbox.size();

    t0 = SteadyClock::now();
    auto fin = operator_client.result("finalize", {{"batch_size", config.batch_size}, {"all", true}});
    report.finalize.total_seconds = seconds_since(t0);
    report.finalize.items = fin["blocks"].size();

    auto counts = node.matcher().counts();
    report.observed = {counts[matcher::PairState::verified], counts[matcher::PairState::risk],
                       counts[matcher::PairState::pending]};
    report.ledger_records = node.ledger().record_count();
    report.ledger_height = node.ledger().height();
    report.tip_hash = to_hex(node.ledger().tip_hash());
    report.chain_ok = node.ledger().verify_chain().ok;

    auto fail_if = [&](bool bad, std::string what) {
        if (bad) report.failures.push_back(std::move(what));
    };
    fail_if(!(report.observed == report.expected), "state counts differ from the fault plan");
    fail_if(report.observed.verified + report.observed.risk + report.observed.pending != report.distinct_keys,
            "state counts do not cover every generated key");
    fail_if(report.ledger_records != report.expected.verified, "ledger record count differs from verified count");
    fail_if(!report.chain_ok, "ledger chain does not verify");
    fail_if(report.messages_posted != 2 * report.distinct_keys - report.omissions,
            "posted message count differs from the plan");
    fail_if(config.mismatch_rate == 0 && report.observed.risk != 0, "risk without injected mismatches");
    const std::size_t expected_blocks =
        (report.expected.verified + config.batch_size - 1) / config.batch_size;
    fail_if(report.ledger_height != expected_blocks, "block count differs from ceil(verified / batch_size)");
    return report;
}

}  // namespace abaudit::sim
