#include <doctest.h>
#include <httplib.h>

#include <thread>

#include "quizgen/server.hpp"
#include "quizgen/store.hpp"
#include "support.hpp"

using namespace quizgen;
using namespace quizgen::testing;

namespace {

struct Api {
    Deployment deployment;
    ApiRouter router;

    explicit Api(std::vector<MockBehavior> backends = scripted_backends(), RecordSink* sink = nullptr)
        : deployment(std::move(backends), sink), router(*deployment.orchestrator, deployment.catalog) {}

    std::pair<int, Json> call(std::string_view method, std::string_view path, const Json& body = nullptr) const {
        auto r = router.handle(method, path, body.is_null() ? "" : body.dump());
        return {r.status, Json::parse(r.body)};
    }

    std::string open_session(const std::string& annotator = "ann-1") const {
        auto [status, body] = call("POST", "/sessions", {{"annotator_id", annotator}, {"topic_id", "liberty"}});
        REQUIRE(status == 201);
        return body["session_id"];
    }
};

Json concept_body(const std::string& phrase) {
    auto [s, e] = span_of(kLibertyText, phrase);
    return {{"char_start", s}, {"char_end", e}};
}

Json accept_body(std::size_t index) { return {{"presentation_index", index}, {"verdict", "Accept"}}; }

Json reject_body(std::size_t index) {
    return {{"presentation_index", index},
            {"verdict", "Reject"},
            {"reason", {{"category", "WrongContext"}, {"subtype", "RevealsAnswer"}}}};
}

/// No model identifier, latency or backend exclusion anywhere in a response.
void check_anonymous(const Json& body) {
    const auto text = body.dump();
    CHECK(text.find("model_id") == std::string::npos);
    CHECK(text.find("latency") == std::string::npos);
    CHECK(text.find("excluded") == std::string::npos);
    for (int i = 0; i < 7; ++i) CHECK(text.find("\"m" + std::to_string(i) + "\"") == std::string::npos);
}

}  // namespace

TEST_CASE("status mapping") {
    CHECK(http_status(ErrorCode::UnknownSession) == 404);
    CHECK(http_status(ErrorCode::UnknownTopic) == 404);
    CHECK(http_status(ErrorCode::InvalidState) == 409);
    CHECK(http_status(ErrorCode::AlreadyJudged) == 409);
    CHECK(http_status(ErrorCode::OffsetsOutOfRange) == 400);
    CHECK(http_status(ErrorCode::UnknownReason) == 400);
    CHECK(http_status(ErrorCode::AllBackendsFailed) == 424);
    CHECK(http_status(ErrorCode::StorageFailure) == 500);
}

TEST_CASE("topics and material") {
    Api api;
    auto [s1, topics] = api.call("GET", "/topics");
    CHECK(s1 == 200);
    REQUIRE(topics.size() == 1);
    CHECK(topics[0]["id"] == "liberty");
    auto [s2, material] = api.call("GET", "/topics/liberty/material");
    CHECK(s2 == 200);
    CHECK(material["text"] == kLibertyText);
    auto [s3, missing] = api.call("GET", "/topics/nope/material");
    CHECK(s3 == 404);
    CHECK(missing["error_code"] == "UnknownTopic");
}

TEST_CASE("routing errors") {
    Api api;
    auto [s1, b1] = api.call("GET", "/nowhere");
    CHECK(s1 == 404);
    CHECK(b1["error_code"] == "NotFound");
    auto [s2, b2] = api.call("DELETE", "/topics");
    CHECK(s2 == 405);
    CHECK(b2["error_code"] == "MethodNotAllowed");
    auto r = api.router.handle("POST", "/sessions", "{not json");
    CHECK(r.status == 400);
    CHECK(Json::parse(r.body)["error_code"] == "ParseError");
    auto [s3, b3] = api.call("POST", "/sessions", {{"annotator_id", "a"}});
    CHECK(s3 == 400);
    CHECK(b3.contains("message"));
    auto [s4, b4] = api.call("POST", "/sessions", {{"annotator_id", "a"}, {"topic_id", "nope"}});
    CHECK(s4 == 404);
    CHECK(b4["error_code"] == "UnknownTopic");
    auto [s5, b5] = api.call("POST", "/sessions/session-999999/concepts", concept_body("France"));
    CHECK(s5 == 404);
    CHECK(b5["error_code"] == "UnknownSession");
}

TEST_CASE("full session over the router") {
    Api api;
    const auto id = api.open_session();

    auto [s0, early] = api.call("POST", "/sessions/" + id + "/judgments", accept_body(0));
    CHECK(s0 == 409);
    CHECK(early["error_code"] == "InvalidState");

    auto [s1, bad] = api.call("POST", "/sessions/" + id + "/concepts", Json{{"char_start", 5}, {"char_end", 2}});
    CHECK(s1 == 400);
    CHECK(bad["error_code"] == "OffsetsOutOfRange");

    auto [s2, batch] = api.call("POST", "/sessions/" + id + "/concepts", concept_body("Gustave Eiffel"));
    REQUIRE(s2 == 200);
    CHECK(batch["concept"]["answer_text"] == "Gustave Eiffel");
    REQUIRE(batch["candidates"].size() == 5);
    check_anonymous(batch);
    for (std::size_t i = 0; i < 5; ++i) CHECK(batch["candidates"][i]["presentation_index"] == i);

    auto [s3, bad_reason] = api.call("POST", "/sessions/" + id + "/judgments",
                                     Json{{"presentation_index", 0},
                                          {"verdict", "Reject"},
                                          {"reason", {{"category", "Disfluent"}, {"subtype", "RevealsAnswer"}}}});
    CHECK(s3 == 400);
    CHECK(bad_reason["error_code"] == "UnknownReason");
    auto [s4, no_reason] =
        api.call("POST", "/sessions/" + id + "/judgments", Json{{"presentation_index", 0}, {"verdict", "Reject"}});
    CHECK(s4 == 400);
    CHECK(no_reason["error_code"] == "InvalidRecord");
    auto [s5, out_of_range] = api.call("POST", "/sessions/" + id + "/judgments", accept_body(9));
    CHECK(s5 == 400);
    CHECK(out_of_range["error_code"] == "UnknownCandidate");

    for (std::size_t i = 0; i < 5; ++i) {
        auto [s, j] = api.call("POST", "/sessions/" + id + "/judgments", i % 2 ? reject_body(i) : accept_body(i));
        REQUIRE(s == 200);
        check_anonymous(j);
        CHECK(j["record"]["question_text"] == batch["candidates"][i]["text"]);
        CHECK(j["batch_complete"] == (i == 4));
        if (i == 0) {
            auto [again, dup] = api.call("POST", "/sessions/" + id + "/judgments", accept_body(0));
            CHECK(again == 409);
            CHECK(dup["error_code"] == "AlreadyJudged");
        }
    }

    auto [s6, summary] = api.call("POST", "/sessions/" + id + "/finalize");
    REQUIRE(s6 == 200);
    check_anonymous(summary);
    CHECK(summary["state"] == "Finalized");
    CHECK(summary["concept_count"] == 1);
    CHECK(summary["questions"].size() == 3);
    REQUIRE(summary["warnings"].size() == 2);
    CHECK(summary["warnings"][0]["code"] == "quiz_too_short");
    CHECK(summary["warnings"][1]["code"] == "few_concepts");

    auto [s7, closed] = api.call("POST", "/sessions/" + id + "/concepts", concept_body("France"));
    CHECK(s7 == 409);
    CHECK(closed["error_code"] == "InvalidState");
}

TEST_CASE("all backends failing maps to 424") {
    std::vector<MockBehavior> broken(2);
    broken[0].model_id = "x";
    broken[0].error = "down";
    broken[1].model_id = "y";
    broken[1].error = "down";
    Api api(broken);
    const auto id = api.open_session();
    auto [s, body] = api.call("POST", "/sessions/" + id + "/concepts", concept_body("France"));
    CHECK(s == 424);
    CHECK(body["error_code"] == "AllBackendsFailed");
    auto [s2, retry] = api.call("POST", "/sessions/" + id + "/concepts", concept_body("France"));
    CHECK(s2 == 424);
}

TEST_CASE("judgments reach the store with full provenance") {
    TempDir dir;
    RecordStore store(dir / "records.jsonl");
    Api api(scripted_backends(), &store);
    const auto id = api.open_session();
    auto [_, batch] = api.call("POST", "/sessions/" + id + "/concepts", concept_body("France"));
    for (std::size_t i = 0; i < batch["candidates"].size(); ++i) {
        api.call("POST", "/sessions/" + id + "/judgments", accept_body(i));
    }
    const auto entries = import_records(dir / "records.jsonl");
    REQUIRE(entries.size() == 5);
    std::size_t shared = 0;
    for (const auto& e : entries) {
        CHECK(e.session_id == id);
        CHECK(e.shuffle_seed == batch["shuffle_seed"]);
        CHECK_FALSE(e.record.model_ids.empty());
        if (e.record.model_ids.size() == 2) ++shared;
    }
    CHECK(shared == 1);
}

TEST_CASE("http server round trip") {
    Api api;
    ApiServer server(api.router);
    const int port = server.bind("127.0.0.1", 0);
    REQUIRE(port > 0);
    std::thread t([&] { server.run(); });

    httplib::Client client("127.0.0.1", port);
    auto topics = client.Get("/topics");
    REQUIRE(topics);
    CHECK(topics->status == 200);
    CHECK(topics->get_header_value("Content-Type") == "application/json");

    auto created = client.Post("/sessions", R"({"annotator_id":"web","topic_id":"liberty"})", "application/json");
    REQUIRE(created);
    CHECK(created->status == 201);
    const std::string id = Json::parse(created->body)["session_id"];

    auto batch = client.Post("/sessions/" + id + "/concepts", concept_body("Libertas").dump(), "application/json");
    REQUIRE(batch);
    CHECK(batch->status == 200);
    check_anonymous(Json::parse(batch->body));

    auto missing = client.Get("/sessions");
    REQUIRE(missing);
    CHECK(missing->status == 405);
    CHECK(Json::parse(missing->body)["error_code"] == "MethodNotAllowed");

    server.stop();
    t.join();
}
