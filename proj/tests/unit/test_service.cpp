#include "doctest.h"

#include "abaudit/core/errors.hpp"
#include "authz_matrix.hpp"
#include "service_fixture.hpp"

using namespace abaudit;
using namespace abaudit::service;
using abaudit::testing::opening_for;
using abaudit::testing::Party;
using abaudit::testing::ServiceWorld;
using abaudit::testing::signed_message;
using nlohmann::json;
using protocol::Direction;

TEST_CASE("every endpoint and caller kind follows the allow-list") {
    auto outcome = abaudit::testing::run_authorization_matrix();
    CHECK(outcome.cells == 15 * 7);
    for (const auto& d : outcome.deviations) MESSAGE(d);
    CHECK(outcome.deviations.empty());
}

TEST_CASE("access requests are idempotent and granted by the committee only") {
    ServiceWorld w;
    auto& newco = w.add_client("newco");
    auto first = w.request_access("newco", "company");
    REQUIRE(first["ok"].get<bool>());
    CHECK(first["result"]["status"] == "requested");
    auto again = w.request_access("newco", "company");
    CHECK(again["result"] == first["result"]);
    auto pending = w.client("committee").result("list-access-requests");
    int count = 0;
    for (const auto& p : pending["participants"]) count += p["id"] == "newco";
    CHECK(count == 1);

    CHECK_THROWS_AS(w.client("A").result("grant-access", {{"participant", "newco"}}), AuthorizationError);
    CHECK(w.client("committee").result("grant-access", {{"participant", "newco"}})["status"] == "granted");

    auto imposter = crypto::KeyPair::generate(w.rng);
    ServiceClient other("newco", imposter, in_process(*w.node), 100);
    auto clash = other.call("request-access", {{"role", "company"}, {"auth_key", imposter.public_key().hex()}});
    CHECK(clash["error"]["code"] == "conflict");
    CHECK(newco.result("verify-chain")["ok"] == true);
}

TEST_CASE("requests must be signed by the participant with a fresh nonce") {
    ServiceWorld w;
    auto& a = w.client("A");
    auto req = make_request("verify-chain", "A", 1000, json::object(), a.key());
    CHECK(w.node->handle(req)["ok"] == true);
    CHECK(w.node->handle(req)["error"]["code"] == "unauthenticated");

    auto tampered = make_request("rewards", "A", 1001, {{"participant", "A"}}, a.key());
    tampered["payload"]["participant"] = "B";
    CHECK(w.node->handle(tampered)["error"]["code"] == "unauthenticated");

    auto wrong_key = make_request("verify-chain", "A", 1002, json::object(), w.client("B").key());
    CHECK(w.node->handle(wrong_key)["error"]["code"] == "unauthenticated");

    auto unknown = make_request("no-such-endpoint", "A", 1003, json::object(), a.key());
    CHECK(w.node->handle(unknown)["error"]["code"] == "not_found");

    int status = 0;
    auto text = w.node->handle_text("{not json", &status);
    CHECK(status == 400);
    CHECK(json::parse(text)["error"]["code"] == "validation");
    w.node->handle_text(make_request("verify-chain", "A", 1004, json::object(), a.key()).dump(), &status);
    CHECK(status == 200);
}

TEST_CASE("response sequence numbers strictly increase") {
    ServiceWorld w;
    std::uint64_t last = w.node->last_seq();
    for (int i = 0; i < 5; ++i) {
        auto r1 = w.client("A").call("verify-chain");
        auto r2 = w.client("A").call("finalize");
        CHECK(r1["seq"].get<std::uint64_t>() > last);
        CHECK(r2["seq"].get<std::uint64_t>() == r1["seq"].get<std::uint64_t>() + 1);
        last = r2["seq"].get<std::uint64_t>();
    }
}

TEST_CASE("address registration needs key possession and is exclusive") {
    ServiceWorld w;
    Party fresh(w.rng);
    auto stolen = abaudit::testing::register_payload("B", fresh);
    CHECK_THROWS_AS(w.client("A").result("register-address", stolen), ValidationError);
    CHECK_THROWS_AS(w.client("C").result("register-address", abaudit::testing::register_payload("C", w.a)),
                    ConflictError);
    CHECK_NOTHROW(w.client("A").result("register-address", abaudit::testing::register_payload("A", w.a)));
}

TEST_CASE("posting requires owning the signer address and granted access") {
    ServiceWorld w;
    auto m = signed_message(w.gp, w.a, w.b, Date(2024, 6, 1), Direction::outgoing, 3);
    CHECK_THROWS_AS(w.client("B").result("post-message", {{"message", protocol::to_json(w.gp, m)}}),
                    AuthorizationError);
    auto res = w.client("A").result("post-message", {{"message", protocol::to_json(w.gp, m)}});
    CHECK(res["state"] == "pending");

    w.client("committee").result("revoke-access", {{"participant", "B"}});
    auto m2 = signed_message(w.gp, w.a, w.b, Date(2024, 6, 1), Direction::incoming, 3);
    CHECK_THROWS_AS(w.client("B").result("post-message", {{"message", protocol::to_json(w.gp, m2)}}),
                    AuthorizationError);
    auto m3 = signed_message(w.gp, w.a, w.b, Date(2024, 6, 2), Direction::outgoing, 3);
    auto rejected = w.client("A").call("post-message", {{"message", protocol::to_json(w.gp, m3)}});
    CHECK(rejected["error"]["message"] == "unregistered party");
}

TEST_CASE("companies see only their own pairs and no revealed openings") {
    ServiceWorld w;
    auto m = signed_message(w.gp, w.c, w.b, Date(2024, 5, 9), Direction::outgoing, 1);
    w.post("C", m);

    auto as_a = w.client("A").result("list-pairs", {{"page_size", 100}});
    CHECK(as_a["total"] == 3);
    auto as_c = w.client("C").result("list-pairs", {{"page_size", 100}});
    CHECK(as_c["total"] == 1);
    auto as_auditor = w.client("auditor").result("list-pairs", {{"page_size", 100}});
    CHECK(as_auditor["total"] == 4);
    auto as_b = w.client("B").result("list-pairs", {{"page_size", 100}});
    CHECK(as_b["total"] == 4);
    for (const auto& r : as_a["records"]) {
        auto key = protocol::pair_key_from_json(r["key"]);
        CHECK((key.sender == w.a.address || key.receiver == w.a.address));
    }
    CHECK_THROWS_AS(w.client("C").result("get-record", {{"key", protocol::to_json(w.ledgered_key)}}), NotFoundError);
    CHECK(w.client("A").result("get-record", {{"key", protocol::to_json(w.ledgered_key)}})["height"] == 1);

    w.client("A").result("submit-opening", {{"request_id", w.open_request},
                                            {"package", protocol::to_json(w.gp, w.risk_opening_for_a())}});
    auto risk_for_b = w.client("B").result("list-pairs", {{"state", "risk"}});
    auto req_b = risk_for_b["records"][0]["opening_requests"][0];
    CHECK(req_b["status"] == "fulfilled");
    CHECK_FALSE(req_b.contains("package"));
    CHECK(risk_for_b.dump().find("\"amount\"") == std::string::npos);
    auto risk_for_auditor = w.client("auditor").result("list-pairs", {{"state", "risk"}});
    auto req_aud = risk_for_auditor["records"][0]["opening_requests"][0];
    CHECK(req_aud["revealed_amount"] == 1000);
    CHECK(req_aud["commitment_verified"] == true);
}

TEST_CASE("opening workflow through the service") {
    ServiceWorld w;
    CHECK(w.client("A").result("opening-requests")["requests"].size() == 1);
    CHECK(w.client("B").result("opening-requests")["requests"].empty());

    auto bad = w.risk_opening_for_a();
    bad.amount = 999;
    auto res = w.client("A").call("submit-opening", {{"request_id", w.open_request}, {"package", protocol::to_json(w.gp, bad)}});
    CHECK(res["error"]["code"] == "invalid_opening");
    CHECK_THROWS_AS(w.client("B").result("submit-opening", {{"request_id", w.open_request},
                                                            {"package", protocol::to_json(w.gp, w.risk_opening_for_a())}}),
                    AuthorizationError);

    w.client("A").result("submit-opening", {{"request_id", w.open_request},
                                            {"package", protocol::to_json(w.gp, w.risk_opening_for_a())}});
    auto req_b = w.client("auditor").result("request-opening", {{"key", protocol::to_json(w.risk_key)}, {"target", 1}});
    auto mb = signed_message(w.gp, w.a, w.b, Date(2024, 5, 2), Direction::incoming, 900);
    auto done = w.client("B").result("submit-opening", {{"request_id", req_b["id"]},
                                                        {"package", protocol::to_json(w.gp, opening_for(mb, 900))}});
    CHECK(done["state"] == "risk-confirmed-mismatch");
    CHECK_THROWS_AS(w.client("auditor").result("request-opening", {{"key", protocol::to_json(w.pending_key)}, {"target", 0}}),
                    StateError);
}

TEST_CASE("reward points follow the configured credits and the event log") {
    ServiceWorld w;
    auto base = w.client("A").result("rewards")["points"].get<std::uint64_t>();
    for (int d = 10; d < 20; ++d) {
        w.post("A", signed_message(w.gp, w.a, w.c, Date(2024, 7, d), Direction::outgoing, 5));
    }
    w.post("A", signed_message(w.gp, w.a, w.c, Date(2024, 7, 19), Direction::outgoing, 5));
    w.client("A").result("submit-opening", {{"request_id", w.open_request},
                                            {"package", protocol::to_json(w.gp, w.risk_opening_for_a())}});
    auto account = w.client("A").result("rewards");
    CHECK(account["points"].get<std::uint64_t>() - base == 15);

    std::map<std::string, std::uint64_t> replayed;
    for (const auto& e : w.node->rewards().log()) replayed[e.participant] += e.points;
    for (const auto& id : {"A", "B", "C", "operator"}) {
        CHECK(replayed[id] == w.node->rewards().account(id).points);
    }
    CHECK(w.client("operator").result("rewards")["points"] == 10);
    CHECK_THROWS_AS(w.client("A").result("rewards", {{"participant", "B"}}), AuthorizationError);
    CHECK(w.client("auditor").result("rewards", {{"participant", "B"}})["points"] == 2);
    CHECK_THROWS_AS(w.node->credit_reward("revoked-co", RewardEvent::posted_message), AuthorizationError);
    CHECK(w.node->credit_reward("C", RewardEvent::posted_message).points == 1);
}

TEST_CASE("finalize and verify-chain over the service") {
    ServiceWorld w;
    w.post("B", signed_message(w.gp, w.a, w.b, Date(2024, 5, 3), Direction::incoming, 10));
    auto fin = w.client("operator").result("finalize", {{"batch_size", 5}});
    CHECK(fin["blocks"].size() == 1);
    CHECK(fin["height"] == 2);
    auto check = w.client("auditor").result("verify-chain");
    CHECK(check["ok"] == true);
    CHECK(check["height"] == 2);
    CHECK(w.client("operator").result("finalize")["blocks"].empty());

    w.now += 30 * 86400;
    w.post("A", signed_message(w.gp, w.a, w.b, Date(2024, 5, 20), Direction::outgoing, 10));
    CHECK(w.client("auditor").result("flag-stale")["flagged"].empty());
}
