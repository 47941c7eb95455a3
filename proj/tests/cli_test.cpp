#include <doctest.h>
#include <httplib.h>

#include <csignal>
#include <mutex>
#include <pthread.h>
#include <sstream>
#include <thread>

#include "quizgen/cli.hpp"
#include "quizgen/config.hpp"
#include "quizgen/store.hpp"
#include "support.hpp"

using namespace quizgen;
using namespace quizgen::testing;
using namespace std::chrono_literals;

namespace {

struct Run {
    int code = 0;
    std::string out;
    std::string err;
};

Run cli(std::vector<std::string> args) {
    std::ostringstream out, err;
    Run r;
    r.code = run_cli(args, out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

std::string error_code_in(const Run& r) {
    return Json::parse(r.err)["error_code"];
}

RecordLogEntry entry(std::uint64_t seq, const std::string& annotator, const std::string& answer,
                     const std::string& question, ModelIdSet models, Judgment j) {
    return RecordLogEntry{seq, record(annotator, "liberty", answer, question, std::move(models), j), "session-000001",
                          7};
}

/// Three records: model a judged twice (one accept), b once (accepted).
std::vector<RecordLogEntry> three_records() {
    return {entry(1, "u1", "France", "Which country gave the statue?", {"a"}, Judgment::accept()),
            entry(2, "u1", "France", "What is France?", {"a"}, reject(ErrorSubtype::NotSpecificEnough)),
            entry(3, "u1", "France", "Where is France?", {"b"}, Judgment::accept())};
}

std::vector<RecordLogEntry> two_question_fixture() {
    return {entry(1, "u1", "Gustave Eiffel", "who built the statue", {"a"}, Judgment::accept()),
            entry(2, "u2", "Gustave Eiffel", "who built the statue of liberty", {"b"}, Judgment::accept())};
}

Json lookup(const Json& j, const std::string& model) { return j["per_model"][model]; }

/// Thread-safe string sink for output written while serve runs.
class SharedBuffer : public std::stringbuf {
public:
    std::string text() {
        std::lock_guard lock(mu_);
        return str();
    }

protected:
    std::streamsize xsputn(const char* s, std::streamsize n) override {
        std::lock_guard lock(mu_);
        return std::stringbuf::xsputn(s, n);
    }
    int_type overflow(int_type c) override {
        std::lock_guard lock(mu_);
        return std::stringbuf::overflow(c);
    }

private:
    std::recursive_mutex mu_;
};

}  // namespace

TEST_CASE("analyze acceptance prints one row per model") {
    TempDir dir;
    export_records(dir / "r.jsonl", three_records());
    auto r = cli({"analyze", "acceptance", "--records", (dir / "r.jsonl").string()});
    REQUIRE(r.code == 0);
    std::istringstream lines(r.out);
    std::vector<std::string> rows;
    for (std::string l; std::getline(lines, l);) rows.push_back(l);
    REQUIRE(rows.size() == 6);
    CHECK(rows[0].rfind("Model", 0) == 0);
    CHECK(rows[2].rfind("a ", 0) == 0);
    CHECK(rows[2].find("50.0") != std::string::npos);
    CHECK(rows[3].rfind("b ", 0) == 0);
    CHECK(rows[3].find("100.0") != std::string::npos);
    CHECK(rows[5].find("66.7") != std::string::npos);
}

TEST_CASE("table and json carry the same values") {
    TempDir dir;
    export_records(dir / "r.jsonl", three_records());
    const auto path = (dir / "r.jsonl").string();
    auto table = cli({"analyze", "acceptance", "--records", path});
    auto json = cli({"analyze", "acceptance", "--records", path, "--format", "json"});
    REQUIRE(json.code == 0);
    const auto j = Json::parse(json.out);
    CHECK(lookup(j, "a")["accepted"] == 1);
    CHECK(lookup(j, "a")["total"] == 2);
    CHECK(lookup(j, "a")["rate"] == 0.5);
    CHECK(table.out.find("50.0") != std::string::npos);

    auto errors = cli({"analyze", "errors", "--records", path, "--format", "json"});
    REQUIRE(errors.code == 0);
    CHECK(Json::parse(errors.out)["per_model"]["a"]["categories"]["WrongContext"] == 0.5);
    CHECK(cli({"analyze", "errors", "--records", path}).out.find("WrongContext") != std::string::npos);
}

TEST_CASE("analyze upper-bound on the two-question fixture") {
    TempDir dir;
    export_records(dir / "r.jsonl", two_question_fixture());
    const auto path = (dir / "r.jsonl").string();
    auto table = cli({"analyze", "upper-bound", "--records", path, "--metric", "rouge1"});
    REQUIRE(table.code == 0);
    CHECK(table.out.find("0.800") != std::string::npos);
    auto json = cli({"analyze", "upper-bound", "--records", path, "--metric", "rouge1", "--format", "json"});
    CHECK(std::abs(Json::parse(json.out)["value"].get<double>() - 0.8) < 1e-9);

    auto missing = cli({"analyze", "upper-bound", "--records", path});
    CHECK(missing.code == 1);
    CHECK(error_code_in(missing) == "UnknownMetric");
    auto unknown = cli({"analyze", "upper-bound", "--records", path, "--metric", "cider"});
    CHECK(error_code_in(unknown) == "UnknownMetric");
}

TEST_CASE("embed_f1 needs an embedder") {
    TempDir dir;
    export_records(dir / "r.jsonl", two_question_fixture());
    const auto path = (dir / "r.jsonl").string();
    auto none = cli({"analyze", "upper-bound", "--records", path, "--metric", "embed_f1"});
    CHECK(none.code == 1);
    CHECK(error_code_in(none) == "MissingEmbedder");
    auto hash = cli({"analyze", "upper-bound", "--records", path, "--metric", "embed_f1", "--embedder", "hash"});
    CHECK(hash.code == 0);
    auto remote = cli({"analyze", "upper-bound", "--records", path, "--metric", "embed_f1", "--embedder", "remote"});
    CHECK(remote.code == 2);
    CHECK(error_code_in(remote) == "ConfigError");
}

TEST_CASE("analyze report and analysis errors") {
    TempDir dir;
    export_records(dir / "r.jsonl", three_records());
    const auto path = (dir / "r.jsonl").string();
    auto report = cli({"analyze", "report", "--records", path, "--metric", "rouge1", "--metric", "bleu"});
    REQUIRE(report.code == 0);
    CHECK(report.out.find("Upper Bound") != std::string::npos);
    CHECK(report.out.find("R-1") != std::string::npos);

    auto sys = cli({"analyze", "system-corr", "--records", path, "--metric", "rouge1"});
    CHECK(sys.code == 1);
    CHECK(error_code_in(sys) == "TooFewModels");
    auto agreement = cli({"analyze", "iaa", "--records", path});
    CHECK(error_code_in(agreement) == "DegenerateInput");
}

TEST_CASE("analyze rejects bad input files") {
    TempDir dir;
    write_file(dir / "bad.jsonl", "{\n");
    auto bad = cli({"analyze", "acceptance", "--records", (dir / "bad.jsonl").string()});
    CHECK(bad.code == 1);
    CHECK(error_code_in(bad) == "ParseError");
    auto missing = cli({"analyze", "acceptance", "--records", (dir / "none.jsonl").string()});
    CHECK(error_code_in(missing) == "StorageFailure");
}

TEST_CASE("analyze applies a field mapping") {
    TempDir dir;
    std::string content;
    for (const auto& e : three_records()) {
        auto j = entry_to_json(e);
        j["rater"] = j["annotator_id"];
        j.erase("annotator_id");
        content += j.dump() + "\n";
    }
    write_file(dir / "foreign.jsonl", content);
    write_file(dir / "map.json", R"({"rater":"annotator_id"})");
    auto r = cli({"analyze", "acceptance", "--records", (dir / "foreign.jsonl").string(), "--mapping",
                  (dir / "map.json").string()});
    CHECK(r.code == 0);
    CHECK(r.out.find("66.7") != std::string::npos);
}

TEST_CASE("usage errors") {
    auto none = cli({});
    CHECK(none.code == 2);
    CHECK(error_code_in(none) == "UsageError");
    CHECK(error_code_in(cli({"analyze", "sentiment", "--records", "x"})) == "UsageError");
    CHECK(error_code_in(cli({"analyze", "acceptance"})) == "UsageError");
    CHECK(error_code_in(cli({"analyze", "acceptance", "--records", "x", "--format", "xml"})) == "UsageError");
    CHECK(cli({"--help"}).code == 0);
}

TEST_CASE("import-material writes a topic file") {
    TempDir dir;
    std::string words;
    for (int i = 0; i < 600; ++i) words += "word ";
    write_file(dir / "text.txt", words);
    auto r = cli({"import-material", "--topic", "liberty", "--title", "Statue of Liberty", "--file",
                  (dir / "text.txt").string(), "--material-dir", (dir / "topics").string()});
    REQUIRE(r.code == 0);
    CHECK(Json::parse(r.out)["word_count"] == 500);
    TopicCatalog catalog;
    load_topics(dir / "topics", catalog);
    CHECK(catalog.topic("liberty")->title == "Statue of Liberty");
    CHECK(catalog.material("liberty")->word_count == 500);

    write_file(dir / "empty.txt", "");
    auto empty = cli({"import-material", "--topic", "e", "--file", (dir / "empty.txt").string(), "--material-dir",
                      (dir / "topics").string()});
    CHECK(empty.code == 1);
    CHECK(error_code_in(empty) == "EmptyMaterial");
    auto nodir = cli({"import-material", "--topic", "e", "--file", (dir / "text.txt").string()});
    CHECK(nodir.code == 2);
}

TEST_CASE("config parsing") {
    TempDir dir;
    const auto j = Json::parse(R"({
        "listen_address": "0.0.0.0:9000",
        "deadline_ms": 150,
        "store_path": "data/records.jsonl",
        "material_dir": "/srv/topics",
        "embedding_endpoint": "http://127.0.0.1:7000",
        "embedding_dimension": 384,
        "seed": 12,
        "backends": [
            {"model_id": "mixqg", "endpoint": "http://127.0.0.1:7001", "display_name": "MixQG-L"},
            {"model_id": "mock1", "mock": {"template": "Q {answer}?", "delay_ms": 5}}
        ]
    })");
    auto c = parse_config(j, dir.path());
    CHECK(c.listen_address == "0.0.0.0:9000");
    CHECK(c.deadline == 150ms);
    CHECK(c.overhead == 50ms);
    CHECK(c.store_path == dir.path() / "data/records.jsonl");
    CHECK(c.material_dir == "/srv/topics");
    CHECK(*c.embedding_endpoint == "http://127.0.0.1:7000");
    CHECK(c.embedding_dimension == 384);
    CHECK(c.seed == 12);
    REQUIRE(c.backends.size() == 2);
    CHECK(c.backends[0].model.display_name == "MixQG-L");
    CHECK_FALSE(c.backends[0].mock.has_value());
    CHECK(c.backends[1].model.endpoint == "mock:mock1");
    CHECK(c.backends[1].mock->question_template == "Q {answer}?");
    CHECK(c.backends[1].mock->delay == 5ms);
    CHECK(make_registry(c)->resolve(c.backends[1].model)->call(GenerationRequest{"ctx", "x", 30, "r"}, 100ms).body ==
          R"({"question":"Q x?","model_id":"mock1"})");

    CHECK(error_code_of([] { parse_config(Json::parse(R"({"deadline_ms": 0})")); }) == ErrorCode::ConfigError);
    CHECK(error_code_of([] { parse_config(Json::parse(R"({"backends": [{"model_id": "a"}]})")); }) ==
          ErrorCode::ConfigError);
    CHECK(error_code_of([] {
              parse_config(Json::parse(
                  R"({"backends": [{"model_id": "a", "endpoint": "mock:a"}, {"model_id": "a", "endpoint": "mock:a"}]})"));
          }) == ErrorCode::ConfigError);
    CHECK(error_code_of([] { check_serve_config(Config{}); }) == ErrorCode::ConfigError);
    CHECK(split_listen_address("127.0.0.1:0") == std::pair<std::string, int>{"127.0.0.1", 0});
    CHECK(error_code_of([] { split_listen_address("localhost"); }) == ErrorCode::ConfigError);
    CHECK(error_code_of([] { split_listen_address("h:99999"); }) == ErrorCode::ConfigError);
}

TEST_CASE("environment overrides") {
    TempDir dir;
    write_file(dir / "c.json", R"({"listen_address": "127.0.0.1:1", "store_path": "a.jsonl"})");
    auto env = [](const std::string& name) -> std::optional<std::string> {
        if (name == "QUIZGEN_LISTEN_ADDRESS") return "127.0.0.1:2";
        if (name == "QUIZGEN_STORE_PATH") return "/tmp/b.jsonl";
        return std::nullopt;
    };
    auto c = load_config(dir / "c.json", env);
    CHECK(c.listen_address == "127.0.0.1:2");
    CHECK(c.store_path == "/tmp/b.jsonl");
    auto plain = load_config(dir / "c.json", [](const std::string&) { return std::nullopt; });
    CHECK(plain.store_path == dir / "a.jsonl");
    CHECK(error_code_of([&] { load_config(dir / "missing.json"); }) == ErrorCode::ConfigError);
}

TEST_CASE("serve with zero backends is a config error") {
    TempDir dir;
    write_file(dir / "c.json", R"({"listen_address": "127.0.0.1:0", "backends": []})");
    auto r = cli({"serve", "--config", (dir / "c.json").string()});
    CHECK(r.code == 2);
    CHECK(error_code_in(r) == "ConfigError");
}

TEST_CASE("serve runs until signalled") {
    TempDir dir;
    save_topic(dir / "topics", Topic{"liberty", "Statue of Liberty", ""},
               load_material(Topic{"liberty", "Statue of Liberty", ""}, kLibertyText));
    write_file(dir / "c.json", R"({
        "listen_address": "127.0.0.1:0",
        "store_path": "records.jsonl",
        "material_dir": "topics",
        "backends": [{"model_id": "m0", "mock": {}}, {"model_id": "m1", "mock": {"template": "Who is {answer}?"}}]
    })");

    // Every thread blocks the signals so that only serve's sigwait sees them.
    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    sigset_t previous;
    pthread_sigmask(SIG_BLOCK, &signals, &previous);

    SharedBuffer buffer;
    std::ostream out(&buffer);
    std::ostringstream err;
    int code = -1;
    std::thread server([&] { code = run_cli({"serve", "--config", (dir / "c.json").string()}, out, err); });

    std::string line;
    for (int i = 0; i < 500 && line.empty(); ++i) {
        const auto text = buffer.text();
        if (auto nl = text.find('\n'); nl != std::string::npos) line = text.substr(0, nl);
        std::this_thread::sleep_for(10ms);
    }
    REQUIRE_FALSE(line.empty());
    const auto status = Json::parse(line);
    CHECK(status["status"] == "listening");
    CHECK(status["topics"] == 1);
    const auto [host, port] = split_listen_address(status["address"]);

    httplib::Client client(host, port);
    auto created = client.Post("/sessions", R"({"annotator_id":"a","topic_id":"liberty"})", "application/json");
    REQUIRE(created);
    const std::string id = Json::parse(created->body)["session_id"];
    auto [s, e] = span_of(kLibertyText, "France");
    auto batch = client.Post("/sessions/" + id + "/concepts", Json{{"char_start", s}, {"char_end", e}}.dump(),
                             "application/json");
    REQUIRE(batch);
    CHECK(Json::parse(batch->body)["candidates"].size() == 2);
    auto judged = client.Post("/sessions/" + id + "/judgments", R"({"presentation_index":0,"verdict":"Accept"})",
                              "application/json");
    REQUIRE(judged);
    CHECK(judged->status == 200);

    ::kill(::getpid(), SIGTERM);
    server.join();
    pthread_sigmask(SIG_SETMASK, &previous, nullptr);
    CHECK(code == 0);
    CHECK(import_records(dir / "records.jsonl").size() == 1);
}
