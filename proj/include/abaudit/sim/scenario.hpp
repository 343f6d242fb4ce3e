#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "abaudit/core/date.hpp"
#include "abaudit/crypto/group.hpp"

namespace abaudit::sim {

struct ScenarioConfig {
    std::size_t n_companies = 20;
    std::size_t counterparties_per_company = 3;
    std::size_t n_transactions = 1000;
    double mismatch_rate = 0.0;
    double omission_rate = 0.0;
    std::uint64_t seed = 1;
    Date start_date{2024, 1, 1};
    std::size_t days = 30;
    crypto::SecurityLevel group = crypto::SecurityLevel::test;
    std::size_t batch_size = 500;

    // Throws ParameterError on out-of-range rates, zero counts or more
    // counterparties than other companies.
    void validate() const;
};

// Unknown keys are rejected so that typos do not silently fall back to
// defaults.
ScenarioConfig scenario_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ScenarioConfig& c);

struct MachineDescriptor {
    std::string cpu;
    unsigned hardware_threads = 0;
    std::string os;
    std::string compiler;
};
MachineDescriptor describe_machine();
nlohmann::json to_json(const MachineDescriptor& m);

struct PhaseTiming {
    double total_seconds = 0;
    std::size_t items = 0;
    double mean_seconds() const { return items ? total_seconds / static_cast<double>(items) : 0.0; }
};

struct StateCounts {
    std::size_t verified = 0;
    std::size_t risk = 0;
    std::size_t pending = 0;

    friend bool operator==(const StateCounts&, const StateCounts&) = default;
};

struct ScenarioReport {
    ScenarioConfig config;
    std::size_t value_sets = 0;
    std::size_t distinct_keys = 0;
    std::size_t messages_posted = 0;
    std::size_t omissions = 0;
    std::size_t mismatches = 0;
    StateCounts expected;
    StateCounts observed;
    std::size_t ledger_records = 0;
    std::uint64_t ledger_height = 0;
    std::string tip_hash;
    bool chain_ok = false;
    PhaseTiming setup;       // per value set
    PhaseTiming encryption;  // per posted message
    PhaseTiming posting;     // per posted message, service round trip
    PhaseTiming finalize;    // per ledger block
    MachineDescriptor machine;
    std::vector<std::string> failures;

    bool accounting_ok() const { return failures.empty(); }
};

nlohmann::json to_json(const ScenarioReport& r);

// End-to-end run: wallets set up value sets, stage transactions with the
// injected faults, build and sign daily messages, post them through the
// node service, and the operator finalizes. Omitted counter-posts must end
// Pending, injected amount flips Risk and the rest Verified.
ScenarioReport run_scenario(const ScenarioConfig& config);

struct BenchReport {
    std::string kind;
    std::size_t n = 0;
    std::uint64_t seed = 0;
    crypto::SecurityLevel group = crypto::SecurityLevel::production;
    PhaseTiming timing;
    std::map<std::string, double> extra;
    std::optional<StateCounts> counts;
    std::uint64_t classify_calls = 0;
    MachineDescriptor machine;
};

nlohmann::json to_json(const BenchReport& r);

// Mean time to create one value set (key pair, address, shared secret and
// announcement) while one wallet selects n counterparties.
BenchReport bench_setup(std::size_t n, std::uint64_t seed, crypto::SecurityLevel group);
// Mean time to commit and sign one daily message; n single-transaction days.
BenchReport bench_encrypt(std::size_t n, std::uint64_t seed, crypto::SecurityLevel group);
// Time for the matcher to ingest and classify both sides of n transactions.
BenchReport bench_verify(std::size_t n, std::uint64_t seed, crypto::SecurityLevel group);

}  // namespace abaudit::sim
