#include "doctest.h"

#include "abaudit/core/errors.hpp"
#include "wallet_fixture.hpp"

using namespace abaudit;
using namespace abaudit::protocol;

namespace {

PostedMessage sample_message(wallet::Wallet& w) {
    w.stage_transaction({"B", Direction::outgoing, 1000, Date::parse_iso("2020-01-01"), "inv"});
    return w.build_daily_messages(Date::parse_iso("2020-01-01")).messages.at(0);
}

}  // namespace

TEST_CASE("canonical message bytes layout") {
    const auto& gp = crypto::setup_group(crypto::SecurityLevel::test);
    abaudit::testing::WalletPair p(gp);
    auto m = sample_message(p.a);
    auto bytes = canonical_message_bytes(gp, m);
    REQUIRE(bytes.size() == 43 + 43 + 2 * gp.element_bytes() + 8 + 1);

    Bytes expected;
    put_string(expected, m.sender.str());
    put_string(expected, m.receiver.str());
    put_bytes(expected, m.amount_commitment.to_bytes(gp));
    put_bytes(expected, m.detail_commitment.to_bytes(gp));
    put_string(expected, "20200101");
    put_u8(expected, 0);
    CHECK(bytes == expected);
    CHECK(std::string(bytes.begin(), bytes.begin() + 3) == "ab1");
    CHECK(bytes.back() == 0);
}

TEST_CASE("message codecs preserve every field") {
    for (auto level : {crypto::SecurityLevel::test, crypto::SecurityLevel::production}) {
        const auto& gp = crypto::setup_group(level);
        abaudit::testing::WalletPair p(gp);
        auto m = sample_message(p.a);

        Bytes bin;
        encode(bin, gp, m);
        ByteReader r(bin);
        auto back = decode_message(r, gp);
        r.expect_done();
        CHECK(canonical_message_bytes(gp, back) == canonical_message_bytes(gp, m));
        CHECK(back.signature == m.signature);
        CHECK(back.signer == m.signer);

        auto j = to_json(gp, m);
        auto from_j = message_from_json(gp, j);
        CHECK(canonical_message_bytes(gp, from_j) == canonical_message_bytes(gp, m));
        CHECK(from_j.signature == m.signature);

        auto opening = p.a.produce_opening(m.ref());
        Bytes ob;
        encode(ob, gp, opening);
        ByteReader orr(ob);
        CHECK(opening_matches(gp, m, decode_opening(orr, gp)));
        CHECK(opening_matches(gp, m, opening_from_json(gp, to_json(gp, opening))));
    }
}

TEST_CASE("json decoding rejects malformed fields") {
    const auto& gp = crypto::setup_group(crypto::SecurityLevel::test);
    abaudit::testing::WalletPair p(gp);
    auto j = to_json(gp, sample_message(p.a));
    auto bad = j;
    bad.erase("signature");
    CHECK_THROWS_AS(message_from_json(gp, bad), ValidationError);
    bad = j;
    bad["flag"] = 2;
    CHECK_THROWS_AS(message_from_json(gp, bad), ValidationError);
    bad = j;
    bad["sender"] = "xyz";
    CHECK_THROWS_AS(message_from_json(gp, bad), ValidationError);
    bad = j;
    bad["signature"] = std::string(128, '0');
    CHECK_THROWS_AS(message_from_json(gp, bad), DecodeError);
    bad = j;
    bad["date"] = 5;
    CHECK_THROWS_AS(message_from_json(gp, bad), ValidationError);
}

TEST_CASE("opening mismatch is detected") {
    const auto& gp = crypto::setup_group(crypto::SecurityLevel::test);
    abaudit::testing::WalletPair p(gp);
    auto m = sample_message(p.a);
    auto o = p.a.produce_opening(m.ref());
    CHECK(opening_matches(gp, m, o));
    auto wrong_amount = o;
    wrong_amount.amount = 999;
    CHECK_FALSE(opening_matches(gp, m, wrong_amount));
    auto wrong_details = o;
    wrong_details.details = {"other"};
    CHECK_FALSE(opening_matches(gp, m, wrong_details));
    auto wrong_r = o;
    wrong_r.amount_randomness = crypto::add(gp, o.amount_randomness, crypto::Scalar::from_u64(1));
    CHECK_FALSE(opening_matches(gp, m, wrong_r));
    auto wrong_ref = o;
    wrong_ref.ref.flag = Direction::incoming;
    CHECK_FALSE(opening_matches(gp, m, wrong_ref));
}
