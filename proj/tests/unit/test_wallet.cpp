#include "doctest.h"

#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>

#include "abaudit/core/errors.hpp"
#include "wallet_fixture.hpp"

using namespace abaudit;
using namespace abaudit::wallet;
using abaudit::testing::context;
using abaudit::testing::WalletPair;

namespace {

const crypto::GroupParams& test_group() { return crypto::setup_group(crypto::SecurityLevel::test); }

StagedTransaction tx(CompanyId cp, Direction d, std::int64_t amount, const char* date, std::string details = "") {
    return StagedTransaction{std::move(cp), d, amount, Date::parse_iso(date), std::move(details)};
}

std::size_t count_status(const std::vector<ValueSet>& sets, ValueSetStatus s) {
    return static_cast<std::size_t>(
        std::count_if(sets.begin(), sets.end(), [&](const ValueSet& v) { return v.status == s; }));
}

}  // namespace

TEST_CASE("init_wallet creates awaiting sets and notifications") {
    const auto& gp = test_group();
    auto w = Wallet::init("A", {{"B", "C", "D"}, {}}, context(gp, 1));
    auto sets = w.value_sets();
    CHECK(sets.size() == 3);
    CHECK(count_status(sets, ValueSetStatus::awaiting_counterparty) == 3);
    CHECK(w.outbox_size() == 3);
    for (const auto& s : sets) {
        CHECK(s.own_address == crypto::derive_address(s.signing_key.public_key()));
        CHECK_FALSE(s.counterparty_address.has_value());
    }
}

TEST_CASE("init_wallet edge cases") {
    const auto& gp = test_group();
    auto empty = Wallet::init("A", {}, context(gp, 1));
    CHECK(empty.value_sets().empty());
    CHECK(empty.outbox_size() == 0);

    auto dup = Wallet::init("A", {{"B", "B", "A"}, {"retail"}}, context(gp, 1));
    CHECK(dup.value_sets().size() == 1);

    auto gallery = Wallet::init("A", {{}, {"media"}}, context(gp, 1));
    const auto& media = abaudit::testing::sample_directory().gallery.at("media");
    CHECK(gallery.value_sets().size() == media.size());

    try {
        Wallet::init("A", {{"B", "Z9", "Q7"}, {}}, context(gp, 1));
        FAIL("expected rejection");
    } catch (const ValidationError& e) {
        std::string msg = e.what();
        CHECK(msg.find("Z9") != std::string::npos);
        CHECK(msg.find("Q7") != std::string::npos);
    }
}

TEST_CASE("notification exchange activates symmetric value sets") {
    const auto& gp = test_group();
    WalletPair p(gp);
    auto xa = p.a.active_set("B");
    auto yb = p.b.active_set("A");
    REQUIRE(xa);
    REQUIRE(yb);
    CHECK(xa->own_address == *yb->counterparty_address);
    CHECK(*xa->counterparty_address == yb->own_address);
    CHECK(xa->shared_secret == yb->shared_secret);
}

TEST_CASE("simultaneous initiation settles on one secret") {
    const auto& gp = test_group();
    auto a = Wallet::init("A", {{"B"}, {}}, context(gp, 1));
    auto b = Wallet::init("B", {{"A"}, {}}, context(gp, 2));
    deliver_all({{"A", &a}, {"B", &b}});
    auto xa = a.active_set("B");
    auto yb = b.active_set("A");
    REQUIRE(xa);
    REQUIRE(yb);
    CHECK(xa->shared_secret == yb->shared_secret);
    CHECK(xa->own_address == *yb->counterparty_address);
    CHECK(a.value_sets().size() == 1);
    CHECK(b.value_sets().size() == 1);
}

TEST_CASE("receive_counterparty_values validation") {
    const auto& gp = test_group();
    auto a = Wallet::init("A", {{"B"}, {}}, context(gp, 1));
    Notification bad{"B", "A", "xyz", {}, std::nullopt};
    CHECK_THROWS_AS(a.receive_counterparty_values(bad), ValidationError);
    CHECK(a.value_sets().at(0).status == ValueSetStatus::awaiting_counterparty);

    // Unknown-to-wallet counterparty is created on the fly and answered.
    auto b = Wallet::init("B", {}, context(gp, 2));
    auto note = a.take_outbox().at(0);
    auto set = b.receive_counterparty_values(note);
    CHECK(set.status == ValueSetStatus::active);
    CHECK(set.counterparty_id == "A");
    auto reply = b.take_outbox();
    REQUIRE(reply.size() == 1);
    CHECK(reply[0].in_reply_to == crypto::Address::parse(note.address));
}

TEST_CASE("rotation: confirm retires the old set") {
    const auto& gp = test_group();
    WalletPair p(gp);
    auto old_active = *p.a.active_set("B");
    auto fresh = p.a.rotate_value_set("B");
    CHECK(fresh.status == ValueSetStatus::awaiting_counterparty);
    CHECK(p.a.active_set("B")->own_address == old_active.own_address);
    p.sync();
    auto sets = p.a.value_sets_for("B");
    CHECK(count_status(sets, ValueSetStatus::active) == 1);
    CHECK(count_status(sets, ValueSetStatus::retired) == 1);
    CHECK(p.a.active_set("B")->own_address == fresh.own_address);
    CHECK(p.b.active_set("A")->counterparty_address == fresh.own_address);
    CHECK_THROWS_AS(p.a.rotate_value_set("C"), StateError);
}

// Enumerates every interleaving of rotations by A (R), single-notification
// deliveries (D) and message builds by A (M) up to length 6, checking the
// value-set invariants after each step.
TEST_CASE("rotation/confirmation interleavings") {
    const auto& gp = test_group();
    const auto day = Date::parse_iso("2020-01-01");
    std::size_t sequences = 0;

    std::function<void(std::string)> run = [&](std::string ops) {
        if (ops.size() == 6) return;
        for (char op : {'R', 'D', 'M'}) {
            std::string seq = ops + op;
            ++sequences;
            WalletPair p(gp, 5);
            std::deque<Notification> wire;
            std::size_t rotations_in_flight = 0;
            for (char step : seq) {
                if (step == 'R') {
                    auto before = p.a.active_set("B")->own_address;
                    p.a.rotate_value_set("B");
                    ++rotations_in_flight;
                    CHECK(p.a.active_set("B")->own_address == before);
                } else if (step == 'D') {
                    for (auto& n : p.a.take_outbox()) wire.push_back(n);
                    for (auto& n : p.b.take_outbox()) wire.push_back(n);
                    if (wire.empty()) continue;
                    auto n = wire.front();
                    wire.pop_front();
                    auto& target = n.to == "A" ? p.a : p.b;
                    try {
                        target.receive_counterparty_values(n);
                    } catch (const StateError&) {
                        // Confirmation of a discarded awaiting set.
                    }
                } else {
                    auto active = *p.a.active_set("B");
                    p.a.stage_transaction(tx("B", Direction::outgoing, 10, "2020-01-01"));
                    auto built = p.a.build_daily_messages(day);
                    REQUIRE(built.messages.size() == 1);
                    CHECK(built.messages[0].sender == active.own_address);
                    CHECK(built.messages[0].signer == active.own_address);
                }
                for (auto* w : {&p.a, &p.b}) {
                    auto other = w == &p.a ? "B" : "A";
                    auto sets = w->value_sets_for(other);
                    REQUIRE(count_status(sets, ValueSetStatus::active) == 1);
                    REQUIRE(count_status(sets, ValueSetStatus::awaiting_counterparty) <= 1);
                }
            }
            // Quiesce and check both sides agree on one relationship.
            for (auto& n : p.a.take_outbox()) wire.push_back(n);
            for (auto& n : p.b.take_outbox()) wire.push_back(n);
            while (!wire.empty()) {
                auto n = wire.front();
                wire.pop_front();
                auto& target = n.to == "A" ? p.a : p.b;
                try {
                    target.receive_counterparty_values(n);
                } catch (const StateError&) {
                }
                for (auto& m : p.a.take_outbox()) wire.push_back(m);
                for (auto& m : p.b.take_outbox()) wire.push_back(m);
            }
            auto xa = *p.a.active_set("B");
            auto yb = *p.b.active_set("A");
            CHECK(xa.own_address == *yb.counterparty_address);
            CHECK(*xa.counterparty_address == yb.own_address);
            CHECK(xa.shared_secret == yb.shared_secret);
            if (rotations_in_flight > 0) {
                CHECK(count_status(p.a.value_sets_for("B"), ValueSetStatus::awaiting_counterparty) == 0);
            }
            run(seq);
        }
    };
    run("");
    CHECK(sequences == 3 + 9 + 27 + 81 + 243 + 729);
}

TEST_CASE("staging") {
    const auto& gp = test_group();
    WalletPair p(gp);
    p.a.stage_transaction(tx("B", Direction::outgoing, 1000, "2020-01-01"));
    CHECK(p.a.journal_size() == 1);
    CHECK_THROWS_AS(p.a.stage_transaction(tx("B", Direction::outgoing, -5, "2020-01-01")), ValidationError);
    CHECK_THROWS_AS(p.a.stage_transaction(tx("B", Direction::outgoing, std::int64_t{1} << 53, "2020-01-01")),
                    ValidationError);
    CHECK_THROWS_AS(p.a.stage_transaction(tx("Z", Direction::outgoing, 1, "2020-01-01")), ValidationError);
    CHECK(p.a.journal_size() == 1);
}

TEST_CASE("daily aggregation builds one message per counterparty and direction") {
    const auto& gp = test_group();
    WalletPair p(gp);
    auto day = Date::parse_iso("2020-01-01");
    p.a.stage_transaction(tx("B", Direction::outgoing, 300, "2020-01-01", "inv-1"));
    p.a.stage_transaction(tx("B", Direction::outgoing, 700, "2020-01-01", "inv-2"));
    p.a.stage_transaction(tx("B", Direction::outgoing, 50, "2020-01-02"));
    p.a.stage_transaction(tx("B", Direction::incoming, 20, "2020-01-01"));
    CHECK(p.a.journal_size() == 4);

    auto built = p.a.build_daily_messages(day);
    CHECK(built.errors.empty());
    REQUIRE(built.messages.size() == 2);
    const auto& out = built.messages[0].flag == Direction::outgoing ? built.messages[0] : built.messages[1];
    auto opening = p.a.produce_opening(out.ref());
    CHECK(opening.amount == 1000);
    CHECK(opening.details == std::vector<std::string>{"inv-1", "inv-2"});
    CHECK(protocol::opening_matches(gp, out, opening));
    auto set = *p.a.active_set("B");
    CHECK(out.sender == set.own_address);
    CHECK(out.receiver == *set.counterparty_address);
    CHECK(protocol::verify_message_signature(gp, out, set.signing_key.public_key()));

    CHECK(p.a.build_daily_messages(Date::parse_iso("2020-03-01")).messages.empty());
}

TEST_CASE("counterparties with equal totals produce identical commitments") {
    for (auto level : {crypto::SecurityLevel::test, crypto::SecurityLevel::production}) {
        const auto& gp = crypto::setup_group(level);
        WalletPair p(gp);
        auto day = Date::parse_iso("2020-01-01");
        p.a.stage_transaction(tx("B", Direction::outgoing, 1000, "2020-01-01", "shipment 42"));
        p.b.stage_transaction(tx("A", Direction::incoming, 400, "2020-01-01", "shipment 42"));
        p.b.stage_transaction(tx("A", Direction::incoming, 600, "2020-01-01"));
        auto ma = p.a.build_daily_messages(day).messages.at(0);
        auto mb = p.b.build_daily_messages(day).messages.at(0);
        CHECK(ma.sender == mb.sender);
        CHECK(ma.receiver == mb.receiver);
        CHECK(ma.date == mb.date);
        CHECK(ma.amount_commitment.to_bytes(gp) == mb.amount_commitment.to_bytes(gp));
        // Details differ (one vs two entries), so only the amount agrees.
        CHECK(ma.detail_commitment != mb.detail_commitment);
        CHECK(ma.flag == Direction::outgoing);
        CHECK(mb.flag == Direction::incoming);
        CHECK(ma.signer == ma.sender);
        CHECK(mb.signer == mb.receiver);
    }
}

TEST_CASE("lazy value-set creation leaves the message unbuilt until activation") {
    const auto& gp = test_group();
    auto a = Wallet::init("A", {}, context(gp, 1));
    auto c = Wallet::init("C", {}, context(gp, 2));
    a.stage_transaction(tx("C", Direction::outgoing, 5, "2020-01-01"));
    CHECK(a.outbox_size() == 1);
    auto built = a.build_daily_messages(Date::parse_iso("2020-01-01"));
    CHECK(built.messages.empty());
    REQUIRE(built.errors.size() == 1);
    CHECK(built.errors[0].counterparty_id == "C");
    deliver_all({{"A", &a}, {"C", &c}});
    CHECK(a.build_daily_messages(Date::parse_iso("2020-01-01")).messages.size() == 1);
}

TEST_CASE("openings survive rotation and reject unknown references") {
    const auto& gp = test_group();
    WalletPair p(gp);
    p.a.stage_transaction(tx("B", Direction::outgoing, 77, "2020-01-01"));
    auto m = p.a.build_daily_messages(Date::parse_iso("2020-01-01")).messages.at(0);
    p.a.rotate_value_set("B");
    p.sync();
    auto opening = p.a.produce_opening(m.ref());
    CHECK(protocol::opening_matches(gp, m, opening));
    CHECK_THROWS_AS(p.b.produce_opening(m.ref()), NotFoundError);
}

TEST_CASE("bulk CSV import") {
    const auto& gp = test_group();
    WalletPair p(gp);
    std::string csv = "counterparty_id,direction,amount_minor,date,details\n"
                      "B,0,100,2020-01-01,first\n"
                      "B,1,250,2020-01-01,\"quoted, with comma\"\n"
                      "B,0,5,2020-13-40,bad date\n"
                      "B,2,5,2020-01-01,bad direction\n"
                      "B,0,-5,2020-01-01,negative\n"
                      "Z,0,5,2020-01-01,unknown company\n"
                      "B,0,12x,2020-01-01,not a number\r\n";
    auto r = p.a.bulk_import(csv);
    CHECK(r.accepted == 2);
    REQUIRE(r.rejected.size() == 5);
    CHECK(r.rejected[0].line == 4);
    CHECK(r.rejected[4].line == 8);
    CHECK(p.a.journal().at(1).tx.details == "quoted, with comma");

    CHECK(p.a.bulk_import("counterparty_id,direction,amount_minor,date,details\n").accepted == 0);
    CHECK_THROWS_AS(p.a.bulk_import("id,dir,amount,date,details\nB,0,1,2020-01-01,x\n"), ValidationError);
    try {
        p.a.bulk_import("counterparty_id,direction,amount_minor,date,details\nB,0,1,2020-01-01,x\nB,0\n");
        FAIL("expected structural rejection");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
    CHECK_THROWS_AS(p.a.bulk_import("counterparty_id,direction,amount_minor,date,details\nB,0,1,2020-01-01,\"open\n"),
                    ValidationError);
}

TEST_CASE("bulk import of 20,000 rows") {
    const auto& gp = test_group();
    WalletPair p(gp);
    std::string csv = "counterparty_id,direction,amount_minor,date,details\n";
    for (int i = 0; i < 20000; ++i) {
        csv += "B," + std::to_string(i % 2) + "," + std::to_string(i + 1) + ",2020-01-" +
               (i % 28 + 1 < 10 ? "0" : "") + std::to_string(i % 28 + 1) + ",row " + std::to_string(i) + "\n";
    }
    auto r = p.a.bulk_import(csv);
    CHECK(r.accepted == 20000);
    CHECK(r.rejected.empty());
}

TEST_CASE("wallet file round trip") {
    const auto& gp = test_group();
    WalletPair p(gp);
    p.a.stage_transaction(tx("B", Direction::outgoing, 900, "2020-01-01", "d"));
    auto m = p.a.build_daily_messages(Date::parse_iso("2020-01-01")).messages.at(0);
    p.a.rotate_value_set("B");

    auto path = std::filesystem::temp_directory_path() / "abaudit_wallet_test.abw";
    p.a.save(path, "correct horse");
    auto loaded = Wallet::load(path, "correct horse", context(gp, 99));
    CHECK(loaded.serialize() == p.a.serialize());
    CHECK(protocol::opening_matches(gp, m, loaded.produce_opening(m.ref())));
    CHECK_THROWS_AS(Wallet::load(path, "wrong", context(gp, 99)), AuthorizationError);

    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(0);
    f.put('X');
    f.close();
    CHECK_THROWS_AS(Wallet::load(path, "correct horse", context(gp, 99)), DecodeError);
    std::filesystem::remove(path);

    const auto& prod = crypto::setup_group(crypto::SecurityLevel::production);
    CHECK_THROWS_AS(Wallet::deserialize(p.a.serialize(), context(prod, 1)), DecodeError);
}
