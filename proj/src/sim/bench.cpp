#include <chrono>

#include "abaudit/core/errors.hpp"
#include "abaudit/matcher/matcher.hpp"
#include "abaudit/sim/scenario.hpp"
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

BenchReport start(std::string kind, std::size_t n, std::uint64_t seed, crypto::SecurityLevel group) {
    BenchReport r;
    r.kind = std::move(kind);
    r.n = n;
    r.seed = seed;
    r.group = group;
    r.machine = describe_machine();
    return r;
}

const Date kBenchStart{2000, 1, 1};

}  // namespace

json to_json(const BenchReport& r) {
    json j{{"kind", r.kind},
           {"n", r.n},
           {"seed", r.seed},
           {"group", to_string(r.group)},
           {"total_seconds", r.timing.total_seconds},
           {"items", r.timing.items},
           {"mean_seconds", r.timing.mean_seconds()},
           {"machine", to_json(r.machine)}};
    for (const auto& [k, v] : r.extra) j[k] = v;
    if (r.counts) {
        j["counts"] = {{"verified", r.counts->verified}, {"risk", r.counts->risk}, {"pending", r.counts->pending}};
        j["classify_calls"] = r.classify_calls;
    }
    return j;
}

BenchReport bench_setup(std::size_t n, std::uint64_t seed, crypto::SecurityLevel group) {
    auto report = start("setup", n, seed, group);
    const auto& gp = crypto::setup_group(group);
    wallet::CompanyDirectory dir;
    dir.companies.insert("self");
    wallet::Selection sel;
    for (std::size_t i = 0; i < n; ++i) {
        auto id = "cp-" + std::to_string(i);
        dir.companies.insert(id);
        sel.companies.push_back(id);
    }
    auto rng = std::make_shared<crypto::SeededRandom>(seed);
    auto t0 = SteadyClock::now();
    auto w = wallet::Wallet::init("self", sel, {&gp, rng, logical_clock(0), dir});
    report.timing.total_seconds = seconds_since(t0);
    report.timing.items = w.value_sets().size();
    report.extra["reference_mean_seconds"] = 0.096;
    return report;
}

BenchReport bench_encrypt(std::size_t n, std::uint64_t seed, crypto::SecurityLevel group) {
    auto report = start("encrypt", n, seed, group);
    const auto& gp = crypto::setup_group(group);
    wallet::CompanyDirectory dir;
    dir.companies = {"A", "B"};
    auto a = wallet::Wallet::init("A", {{"B"}, {}},
                                  {&gp, std::make_shared<crypto::SeededRandom>(seed), logical_clock(0), dir});
    auto b = wallet::Wallet::init("B", {}, {&gp, std::make_shared<crypto::SeededRandom>(seed + 1), logical_clock(0), dir});
    wallet::deliver_all({{"A", &a}, {"B", &b}});
    crypto::SeededRandom amounts(seed ^ 0x5eed);
    for (std::size_t i = 0; i < n; ++i) {
        a.stage_transaction({"B", Direction::outgoing, static_cast<std::int64_t>(1 + amounts.uniform(1'000'000)),
                             kBenchStart.plus_days(static_cast<std::int64_t>(i)), "item-" + std::to_string(i)});
    }
    std::size_t built = 0;
    auto t0 = SteadyClock::now();
    for (std::size_t i = 0; i < n; ++i) {
        built += a.build_daily_messages(kBenchStart.plus_days(static_cast<std::int64_t>(i))).messages.size();
    }
    report.timing.total_seconds = seconds_since(t0);
    report.timing.items = built;
    if (built != n) throw StateError("built " + std::to_string(built) + " messages for " + std::to_string(n));
    report.extra["reference_mean_seconds"] = 0.021;
    report.extra["alternate_reference_mean_seconds"] = 0.012;
    return report;
}

BenchReport bench_verify(std::size_t n, std::uint64_t seed, crypto::SecurityLevel group) {
    auto report = start("verify", n, seed, group);
    const auto& gp = crypto::setup_group(group);
    crypto::SeededRandom rng(seed);
    auto seller = crypto::KeyPair::generate(rng);
    auto buyer = crypto::KeyPair::generate(rng);
    matcher::StaticKeyDirectory directory;
    directory.add(seller.public_key());
    directory.add(buyer.public_key());
    auto s_addr = crypto::derive_address(seller.public_key());
    auto b_addr = crypto::derive_address(buyer.public_key());
    crypto::CommitmentSecret secret;
    rng.fill(secret);

    // Both sides' signed messages are prepared outside the timed region.
    std::vector<protocol::PostedMessage> messages;
    messages.reserve(2 * n);
    for (std::size_t i = 0; i < n; ++i) {
        Date date = kBenchStart.plus_days(static_cast<std::int64_t>(i));
        protocol::PostedMessage m;
        m.sender = s_addr;
        m.receiver = b_addr;
        m.date = date;
        m.amount_commitment = crypto::commit(gp, crypto::Scalar::from_u64(1 + rng.uniform(1'000'000)),
                                             crypto::derive_randomness(gp, secret, date, crypto::kAmountSlot));
        m.detail_commitment = crypto::commit(gp, protocol::detail_scalar(gp, {"item-" + std::to_string(i)}),
                                             crypto::derive_randomness(gp, secret, date, crypto::kDetailSlot));
        for (auto flag : {Direction::outgoing, Direction::incoming}) {
            m.flag = flag;
            const auto& key = flag == Direction::outgoing ? seller : buyer;
            m.signer = flag == Direction::outgoing ? s_addr : b_addr;
            m.signature = crypto::sign(key, protocol::canonical_message_bytes(gp, m));
            messages.push_back(m);
        }
    }

    matcher::Matcher matcher(gp, directory, logical_clock(0));
    auto t0 = SteadyClock::now();
    for (const auto& m : messages) matcher.ingest(m);
    report.timing.total_seconds = seconds_since(t0);
    report.timing.items = n;

    auto op = crypto::KeyPair::generate(rng);
    ledger::Ledger chain(gp, op.public_key(), logical_clock(0));
    t0 = SteadyClock::now();
    auto receipts = matcher.finalize_all(500, chain, op);
    report.extra["finalize_seconds"] = seconds_since(t0);
    report.extra["blocks"] = static_cast<double>(receipts.size());
    report.extra["messages"] = static_cast<double>(messages.size());
    report.extra["reference_seconds_per_10000"] = 60.0;
    report.extra["alternate_reference_mean_seconds"] = 0.001;

    auto counts = matcher.counts();
    report.counts = StateCounts{counts[matcher::PairState::verified], counts[matcher::PairState::risk],
                                counts[matcher::PairState::pending]};
    report.classify_calls = matcher.stats().classify_calls;
    return report;
}

}  // namespace abaudit::sim
