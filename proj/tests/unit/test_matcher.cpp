#include "doctest.h"

#include <filesystem>
#include <thread>

#include "abaudit/core/errors.hpp"
#include "abaudit/matcher/matcher.hpp"
#include "matcher_oracle.hpp"
#include "message_fixture.hpp"

using namespace abaudit;
using namespace abaudit::matcher;
using abaudit::testing::opening_for;
using abaudit::testing::Party;
using abaudit::testing::signed_message;
using protocol::Direction;

namespace {

struct Setup {
    const crypto::GroupParams& gp = crypto::setup_group(crypto::SecurityLevel::test);
    crypto::SeededRandom rng{5};
    Party a{rng};
    Party b{rng};
    Party c{rng};
    StaticKeyDirectory dir;
    Timestamp now = 1'700'000'000;
    Matcher m{gp, dir, [this] { return now; }};

    Setup() {
        dir.add(a.key.public_key());
        dir.add(b.key.public_key());
        dir.add(c.key.public_key());
    }

    PostedMessage msg(Direction flag, std::uint64_t amount, int day = 1, std::uint64_t r_detail = 11,
                      const std::vector<std::string>& details = {}) {
        return signed_message(gp, a, b, Date(2024, 1, day), flag, amount, 7, r_detail, details);
    }
};

}  // namespace

TEST_CASE("pending, verified and risk on ingest") {
    Setup s;
    CHECK(s.m.list_by_state(PairState::verified, 0, 10).records.empty());

    CHECK(s.m.ingest(s.msg(Direction::outgoing, 1000)).state == PairState::pending);
    CHECK(s.m.ingest(s.msg(Direction::incoming, 1000)).state == PairState::verified);
    s.m.ingest(s.msg(Direction::outgoing, 1000, 2));
    CHECK(s.m.ingest(s.msg(Direction::incoming, 900, 2)).state == PairState::risk);

    auto risks = s.m.list_by_state(PairState::risk, 0, 10);
    REQUIRE(risks.total == 1);
    CHECK(risks.records[0].key.date == Date(2024, 1, 2));
    auto verified = s.m.get(s.msg(Direction::outgoing, 0).key());
    REQUIRE(verified);
    CHECK(verified->history.size() == 2);
    CHECK(verified->history[0].state == PairState::pending);
    CHECK(verified->history[1].state == PairState::verified);
    CHECK(s.m.stats().classify_calls == 4);
}

TEST_CASE("detail disagreement alone is a risk") {
    Setup s;
    s.m.ingest(s.msg(Direction::outgoing, 1000, 1, 11, {"invoice 1"}));
    CHECK(s.m.ingest(s.msg(Direction::incoming, 1000, 1, 11, {"invoice 2"})).state == PairState::risk);
}

TEST_CASE("classify is pure and rejects an empty pair") {
    Setup s;
    std::array<std::optional<Slot>, 2> slots;
    CHECK_THROWS_AS(classify(slots), StateError);
    slots[1] = Slot{s.msg(Direction::incoming, 5), s.b.key.public_key(), 0};
    CHECK(classify(slots) == PairState::pending);
    slots[0] = Slot{s.msg(Direction::outgoing, 5), s.a.key.public_key(), 0};
    CHECK(classify(slots) == PairState::verified);
    CHECK(classify(slots) == PairState::verified);
    slots[0] = Slot{s.msg(Direction::outgoing, 6), s.a.key.public_key(), 0};
    CHECK(classify(slots) == PairState::risk);
}

TEST_CASE("rejected messages leave no trace") {
    Setup s;
    auto good = s.msg(Direction::outgoing, 10);

    SUBCASE("unregistered sender") {
        crypto::SeededRandom r(99);
        Party stranger(r);
        auto m = signed_message(s.gp, stranger, s.b, Date(2024, 1, 1), Direction::outgoing, 10);
        CHECK_THROWS_WITH_AS(s.m.ingest(m), "unregistered party", AuthorizationError);
    }
    SUBCASE("unregistered receiver") {
        crypto::SeededRandom r(98);
        Party stranger(r);
        auto m = signed_message(s.gp, s.a, stranger, Date(2024, 1, 1), Direction::outgoing, 10);
        CHECK_THROWS_WITH_AS(s.m.ingest(m), "unregistered party", AuthorizationError);
    }
    SUBCASE("tampered commitment") {
        good.amount_commitment = crypto::commit(s.gp, crypto::Scalar::from_u64(11), crypto::Scalar::from_u64(7));
        CHECK_THROWS_AS(s.m.ingest(good), ValidationError);
    }
    SUBCASE("flag flipped after signing") {
        good.flag = Direction::incoming;
        CHECK_THROWS_AS(s.m.ingest(good), ValidationError);
    }
    SUBCASE("signed by the wrong side") {
        good.signer = s.b.address;
        good.signature = crypto::sign(s.b.key, protocol::canonical_message_bytes(s.gp, good));
        CHECK_THROWS_AS(s.m.ingest(good), ValidationError);
    }
    SUBCASE("commitments from another group") {
        const auto& prod = crypto::setup_group(crypto::SecurityLevel::production);
        auto m = signed_message(prod, s.a, s.b, Date(2024, 1, 1), Direction::outgoing, 10);
        CHECK_THROWS_AS(s.m.ingest(m), ValidationError);
    }
    CHECK(s.m.size() == 0);
    CHECK(s.m.log().count() == 0);
    CHECK(s.m.stats().rejected == 1);
}

TEST_CASE("a later message supersedes its slot and reclassifies") {
    Setup s;
    s.m.ingest(s.msg(Direction::outgoing, 1000));
    CHECK(s.m.ingest(s.msg(Direction::outgoing, 1200)).state == PairState::pending);
    auto r = s.m.get(s.msg(Direction::outgoing, 0).key());
    CHECK(r->slots[0]->message.amount_commitment == s.msg(Direction::outgoing, 1200).amount_commitment);
    CHECK_FALSE(r->slots[1]);

    CHECK(s.m.ingest(s.msg(Direction::incoming, 1000)).state == PairState::risk);
    CHECK(s.m.ingest(s.msg(Direction::incoming, 1200)).state == PairState::verified);

    auto before = s.m.log().count();
    auto again = s.m.ingest(s.msg(Direction::incoming, 1200));
    CHECK(again.state == PairState::verified);
    CHECK_FALSE(again.changed);
    CHECK(s.m.log().count() == before);
}

TEST_CASE("pages follow key order: 25 records in pages of 10") {
    Setup s;
    for (int d = 25; d >= 1; --d) s.m.ingest(s.msg(Direction::outgoing, 1, d));
    auto p0 = s.m.list_by_state(PairState::pending, 0, 10);
    auto p1 = s.m.list_by_state(PairState::pending, 1, 10);
    auto p2 = s.m.list_by_state(PairState::pending, 2, 10);
    auto p3 = s.m.list_by_state(PairState::pending, 3, 10);
    CHECK(p0.records.size() == 10);
    CHECK(p1.records.size() == 10);
    CHECK(p2.records.size() == 5);
    CHECK(p3.records.empty());
    CHECK(p0.total == 25);
    CHECK(p0.records.front().key.date == Date(2024, 1, 1));
    CHECK(p1.records.front().key.date == Date(2024, 1, 11));
    CHECK(p2.records.back().key.date == Date(2024, 1, 25));
    auto odd = s.m.list_by_state(std::nullopt, 0, 100,
                                 [](const PairRecord& r) { return r.key.date.day() % 2 == 1; });
    CHECK(odd.total == 13);
    CHECK_THROWS_AS(s.m.list_by_state(PairState::pending, 0, 0), ParameterError);
}

TEST_CASE("opening requests need a risk pair and an auditor") {
    Setup s;
    s.m.ingest(s.msg(Direction::outgoing, 1000));
    s.m.ingest(s.msg(Direction::incoming, 1000));
    s.m.ingest(s.msg(Direction::outgoing, 1000, 2));
    s.m.ingest(s.msg(Direction::incoming, 900, 2));
    auto verified_key = s.msg(Direction::outgoing, 0, 1).key();
    auto risk_key = s.msg(Direction::outgoing, 0, 2).key();

    auto req = s.m.request_opening(risk_key, "auditor-1", true, Direction::outgoing);
    CHECK(req.status == OpeningStatus::requested);
    CHECK(s.m.open_requests_for(s.a.address).size() == 1);
    CHECK(s.m.open_requests_for(s.b.address).empty());
    CHECK_THROWS_AS(s.m.request_opening(verified_key, "auditor-1", true, Direction::outgoing), StateError);
    CHECK_THROWS_AS(s.m.request_opening(risk_key, "company-A", false, Direction::outgoing), AuthorizationError);
    protocol::PairKey unknown{s.a.address, s.c.address, Date(2024, 1, 1)};
    CHECK_THROWS_AS(s.m.request_opening(unknown, "auditor-1", true, Direction::outgoing), NotFoundError);
}

TEST_CASE("openings settle a risk pair") {
    Setup s;
    SUBCASE("equal amounts, different details: resolved") {
        auto m0 = s.msg(Direction::outgoing, 1000, 1, 11, {"widgets"});
        auto m1 = s.msg(Direction::incoming, 1000, 1, 11, {"gadgets"});
        s.m.ingest(m0);
        s.m.ingest(m1);
        auto r0 = s.m.request_opening(m0.key(), "aud", true, Direction::outgoing);
        auto r1 = s.m.request_opening(m0.key(), "aud", true, Direction::incoming);

        auto bad = opening_for(m0, 1000, 8, 11, {"widgets"});
        CHECK_THROWS_AS(s.m.submit_opening(r0.id, bad), InvalidOpening);
        CHECK(s.m.opening_request(r0.id)->status == OpeningStatus::requested);

        CHECK(s.m.submit_opening(r0.id, opening_for(m0, 1000, 7, 11, {"widgets"})).state == PairState::risk);
        CHECK_THROWS_AS(s.m.submit_opening(r0.id, opening_for(m0, 1000, 7, 11, {"widgets"})), StateError);
        auto done = s.m.submit_opening(r1.id, opening_for(m1, 1000, 7, 11, {"gadgets"}));
        CHECK(done.state == PairState::risk_resolved_verified);
        CHECK(s.m.open_requests_for(s.a.address).empty());
    }
    SUBCASE("different amounts: confirmed mismatch") {
        auto m0 = s.msg(Direction::outgoing, 1000);
        auto m1 = s.msg(Direction::incoming, 900);
        s.m.ingest(m0);
        s.m.ingest(m1);
        auto r0 = s.m.request_opening(m0.key(), "aud", true, Direction::outgoing);
        auto r1 = s.m.request_opening(m0.key(), "aud", true, Direction::incoming);
        CHECK_THROWS_AS(s.m.submit_opening(r1.id, opening_for(m0, 1000)), ValidationError);
        s.m.submit_opening(r1.id, opening_for(m1, 900));
        CHECK(s.m.submit_opening(r0.id, opening_for(m0, 1000)).state == PairState::risk_confirmed_mismatch);
        CHECK_THROWS_AS(s.m.request_opening(m0.key(), "aud", true, Direction::outgoing), StateError);
    }
    CHECK_THROWS_AS(s.m.submit_opening(999, protocol::OpeningPackage{}), NotFoundError);
}

TEST_CASE("superseding a risk message refuses open requests") {
    Setup s;
    auto m0 = s.msg(Direction::outgoing, 1000);
    s.m.ingest(m0);
    s.m.ingest(s.msg(Direction::incoming, 900));
    auto req = s.m.request_opening(m0.key(), "aud", true, Direction::incoming);
    CHECK(s.m.ingest(s.msg(Direction::incoming, 1000)).state == PairState::verified);
    CHECK(s.m.opening_request(req.id)->status == OpeningStatus::refused);
    CHECK_THROWS_AS(s.m.submit_opening(req.id, opening_for(s.msg(Direction::incoming, 1000), 1000)), StateError);
}

TEST_CASE("stale pending flags by age") {
    Setup s;
    s.m.ingest(s.msg(Direction::outgoing, 1, 1));
    s.now += 7 * 86400;
    s.m.ingest(s.msg(Direction::outgoing, 1, 2));
    s.now += 86400;
    s.m.ingest(s.msg(Direction::outgoing, 1, 3));
    s.m.ingest(s.msg(Direction::incoming, 1, 3));

    auto flagged = s.m.flag_stale_pending(7 * 86400);
    REQUIRE(flagged.size() == 1);
    CHECK(flagged[0].key.date == Date(2024, 1, 1));
    CHECK(flagged[0].state == PairState::pending);
    CHECK(s.m.get(flagged[0].key)->stale);
    CHECK_FALSE(s.m.get(s.msg(Direction::outgoing, 1, 2).key())->stale);
    CHECK(s.m.flag_stale_pending(0).size() == 2);

    s.m.ingest(s.msg(Direction::incoming, 1, 1));
    CHECK_FALSE(s.m.get(flagged[0].key)->stale);
}

TEST_CASE("finalize writes eligible records to the ledger once") {
    Setup s;
    auto op = crypto::KeyPair::generate(s.rng);
    ledger::Ledger chain(s.gp, op.public_key(), logical_clock(0));

    CHECK_FALSE(s.m.finalize_verified(10, chain, op).block_height);
    for (int d = 1; d <= 3; ++d) {
        s.m.ingest(s.msg(Direction::outgoing, 50, d));
        s.m.ingest(s.msg(Direction::incoming, 50, d));
    }
    s.m.ingest(s.msg(Direction::outgoing, 50, 4));

    auto intruder = crypto::KeyPair::generate(s.rng);
    CHECK_THROWS_AS(s.m.finalize_verified(10, chain, intruder), AuthorizationError);
    CHECK(chain.height() == 0);

    auto receipt = s.m.finalize_verified(10, chain, op);
    REQUIRE(receipt.block_height);
    CHECK(*receipt.block_height == 1);
    CHECK(receipt.keys.size() == 3);
    CHECK(chain.block(1).records.size() == 3);
    CHECK(chain.verify_chain().ok);
    CHECK(s.m.get(receipt.keys[0])->ledger_height == 1u);
    CHECK_FALSE(s.m.finalize_verified(10, chain, op).block_height);
    CHECK_THROWS_AS(s.m.ingest(s.msg(Direction::incoming, 70, 1)), ConflictError);

    auto rec = chain.get_record(receipt.keys[0]);
    REQUIRE(rec);
    CHECK(rec->record.annotation == ledger::Annotation::clean);
    CHECK(ledger::verify_record(s.gp, rec->record));
}

TEST_CASE("resolved risks carry an annotation and batches split") {
    Setup s;
    auto op = crypto::KeyPair::generate(s.rng);
    ledger::Ledger chain(s.gp, op.public_key(), logical_clock(0));
    for (int d = 1; d <= 24; ++d) {
        s.m.ingest(s.msg(Direction::outgoing, 50, d));
        s.m.ingest(s.msg(Direction::incoming, 50, d));
    }
    auto m0 = s.msg(Direction::outgoing, 1000, 25, 11, {"x"});
    auto m1 = s.msg(Direction::incoming, 1000, 25, 11, {"y"});
    s.m.ingest(m0);
    s.m.ingest(m1);
    auto r0 = s.m.request_opening(m0.key(), "aud", true, Direction::outgoing);
    auto r1 = s.m.request_opening(m0.key(), "aud", true, Direction::incoming);
    s.m.submit_opening(r0.id, opening_for(m0, 1000, 7, 11, {"x"}));
    s.m.submit_opening(r1.id, opening_for(m1, 1000, 7, 11, {"y"}));

    auto receipts = s.m.finalize_all(10, chain, op);
    REQUIRE(receipts.size() == 3);
    CHECK(receipts[2].keys.size() == 5);
    CHECK(chain.record_count() == 25);
    CHECK(chain.get_record(m0.key())->record.annotation == ledger::Annotation::risk_resolved);
    CHECK(chain.verify_chain().ok);
}

TEST_CASE("event log replay rebuilds identical state") {
    Setup s;
    auto op = crypto::KeyPair::generate(s.rng);
    ledger::Ledger chain(s.gp, op.public_key(), logical_clock(0));
    auto path = std::filesystem::temp_directory_path() / "abaudit_matcher_events.log";
    s.m.attach_log_file(path);

    for (int d = 1; d <= 6; ++d) {
        s.now += 3600;
        s.m.ingest(s.msg(Direction::outgoing, 100 * d, d));
        if (d % 3 != 0) s.m.ingest(s.msg(Direction::incoming, d == 2 ? 1 : 100 * d, d));
    }
    auto risk_key = s.msg(Direction::outgoing, 0, 2).key();
    auto r = s.m.request_opening(risk_key, "aud", true, Direction::outgoing);
    s.m.submit_opening(r.id, opening_for(s.msg(Direction::outgoing, 200, 2), 200));
    s.m.request_opening(risk_key, "aud", true, Direction::incoming);
    s.m.finalize_verified(2, chain, op);
    s.now += 10 * 86400;
    s.m.flag_stale_pending();

    auto bytes = s.m.log().bytes();
    CHECK(EventLog::read_file(path) == bytes);
    std::filesystem::remove(path);

    auto copy = Matcher::replay(s.gp, s.dir, bytes, [] { return Timestamp{0}; });
    CHECK(copy->state_digest() == s.m.state_digest());
    CHECK(copy->counts() == s.m.counts());
    CHECK(copy->log().bytes() == bytes);

    auto later = copy->request_opening(risk_key, "aud", true, Direction::incoming);
    CHECK(later.id == 3);

    auto truncated = bytes;
    truncated.pop_back();
    CHECK_THROWS_AS(Matcher::replay(s.gp, s.dir, truncated), DecodeError);
    auto forged = bytes;
    forged[60] ^= 1;
    CHECK_THROWS_AS(Matcher::replay(s.gp, s.dir, forged), DecodeError);
}

TEST_CASE("concurrent ingest across keys") {
    Setup s;
    std::vector<PostedMessage> msgs;
    for (int d = 1; d <= 28; ++d) {
        msgs.push_back(s.msg(Direction::outgoing, 10, d));
        if (d % 4 != 0) msgs.push_back(s.msg(Direction::incoming, d % 7 == 0 ? 11 : 10, d));
    }
    std::vector<std::thread> workers;
    for (int t = 0; t < 4; ++t) {
        workers.emplace_back([&, t] {
            for (std::size_t i = static_cast<std::size_t>(t); i < msgs.size(); i += 4) s.m.ingest(msgs[i]);
        });
    }
    for (auto& w : workers) w.join();
    auto counts = s.m.counts();
    CHECK(counts[PairState::pending] == 7);
    CHECK(counts[PairState::risk] == 3);
    CHECK(counts[PairState::verified] == 18);
}

TEST_CASE("matcher agrees with the rule oracle on every multiset of up to 4 messages") {
    abaudit::testing::OracleWorld world(crypto::setup_group(crypto::SecurityLevel::test));
    int cases = 0, mismatches = 0;
    abaudit::testing::enumerate_sequences(12, 4, true, [&](const std::vector<int>& seq) {
        ++cases;
        if (world.run(seq) != world.expected(seq)) ++mismatches;
    });
    CHECK(cases == 1820);
    CHECK(mismatches == 0);
}
