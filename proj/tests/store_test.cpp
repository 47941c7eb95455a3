#include <doctest.h>

#include <fstream>
#include <random>
#include <thread>

#include "quizgen/store.hpp"
#include "support.hpp"

using namespace quizgen;
using namespace quizgen::testing;

namespace {

RecordLogEntry entry(std::uint64_t seq, Judgment j = Judgment::accept(), std::int64_t when = 0) {
    RecordLogEntry e;
    e.sequence_no = seq;
    e.record = record("ann-1", "liberty", "Gustave Eiffel", "Who built the framework?", {"m1", "m2"}, j, when);
    e.session_id = "session-000001";
    e.shuffle_seed = 42;
    return e;
}

std::string line_with(const std::function<void(Json&)>& edit, std::uint64_t seq = 1) {
    auto j = entry_to_json(entry(seq));
    edit(j);
    return j.dump();
}

struct Failure {
    ErrorCode code;
    std::optional<std::size_t> line;
    std::optional<std::string> field;
};

Failure failure_of(std::string_view content) {
    try {
        parse_records(content);
    } catch (const Error& e) {
        return {e.code(), e.line(), e.field()};
    }
    throw std::logic_error("expected a failure");
}

std::string words(std::size_t n) {
    std::string out;
    for (std::size_t i = 0; i < n; ++i) out += (i ? " w" : "w") + std::to_string(i);
    return out;
}

}  // namespace

TEST_CASE("export line shape") {
    CHECK(encode_entry(entry(1)) ==
          R"({"sequence_no":1,"annotator_id":"ann-1","topic_id":"liberty",)"
          R"("concept":{"answer_text":"Gustave Eiffel","char_start":0,"char_end":14},)"
          R"("question_text":"Who built the framework?","model_ids":["m1","m2"],"verdict":"Accept",)"
          R"("timestamp":"2023-11-14T22:13:20Z","session_id":"session-000001","shuffle_seed":42})");
    const auto rejected = entry_to_json(entry(2, reject(ErrorSubtype::RevealsAnswer)));
    CHECK(rejected["verdict"] == "Reject");
    CHECK(rejected["reason"] == Json{{"category", "WrongContext"}, {"subtype", "RevealsAnswer"}});
}

TEST_CASE("append numbering and durability") {
    TempDir dir;
    const auto path = dir / "records.jsonl";
    {
        RecordStore store(path);
        CHECK(store.append(entry(99)) == 1);
        CHECK(store.append(entry(99)) == 2);
        CHECK(import_records(path).size() == 2);
        store.close();
        CHECK_FALSE(store.is_open());
        CHECK(error_code_of([&] { store.append(entry(0)); }) == ErrorCode::StorageFailure);
    }
    RecordStore reopened(path);
    CHECK(reopened.snapshot().size() == 2);
    CHECK(reopened.append(entry(0)) == 3);
    const auto all = import_records(path);
    REQUIRE(all.size() == 3);
    CHECK(all[2].sequence_no == 3);
}

TEST_CASE("store rejects a corrupt existing log") {
    TempDir dir;
    write_file(dir / "bad.jsonl", "not json\n");
    CHECK(error_code_of([&] { RecordStore s(dir / "bad.jsonl"); }) == ErrorCode::ParseError);
}

TEST_CASE("record sink interface carries batch provenance") {
    TempDir dir;
    RecordStore store(dir / "r.jsonl");
    RecordSink& sink = store;
    sink.append(entry(0).record, "session-000007", 1234);
    const auto snap = store.snapshot();
    REQUIRE(snap.size() == 1);
    CHECK(snap[0].session_id == "session-000007");
    CHECK(snap[0].shuffle_seed == 1234);
}

TEST_CASE("concurrent appends get distinct consecutive numbers") {
    TempDir dir;
    RecordStore store(dir / "r.jsonl");
    std::vector<std::thread> threads;
    for (int t = 0; t < 8; ++t) {
        threads.emplace_back([&] {
            for (int i = 0; i < 25; ++i) store.append(entry(0));
        });
    }
    for (auto& t : threads) t.join();
    const auto all = import_records(dir / "r.jsonl");
    REQUIRE(all.size() == 200);
    for (std::size_t i = 0; i < all.size(); ++i) CHECK(all[i].sequence_no == i + 1);
}

TEST_CASE("property: export and import round-trip byte-identically") {
    std::mt19937_64 rng(21);
    std::vector<Judgment> judgments{Judgment::accept()};
    for (const auto& c : taxonomy()) {
        for (const auto& l : c.leaves) judgments.push_back(Judgment::reject(ErrorReason(l.subtype)));
    }
    TempDir dir;
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<RecordLogEntry> entries;
        for (std::uint64_t i = 1; i <= 30; ++i) {
            auto e = entry(i * (1 + rng() % 3), judgments[rng() % judgments.size()], static_cast<std::int64_t>(i));
            e.record.question_text = "Qu\xC3\xA9stion \"" + std::to_string(rng()) + "\"?";
            e.shuffle_seed = rng();
            entries.push_back(e);
        }
        for (std::size_t i = 1; i < entries.size(); ++i) {
            entries[i].sequence_no = std::max(entries[i].sequence_no, entries[i - 1].sequence_no + 1);
        }
        export_records(dir / "a.jsonl", entries);
        const auto first = read_file(dir / "a.jsonl");
        const auto back = import_records(dir / "a.jsonl");
        CHECK(back == entries);
        export_records(dir / "b.jsonl", back);
        CHECK(read_file(dir / "b.jsonl") == first);
    }
}

TEST_CASE("import rejects the whole file on any bad line") {
    const auto good = encode_entry(entry(1)) + "\n";

    auto missing_reason = failure_of(good + line_with([](Json& j) { j["verdict"] = "Reject"; }, 2) + "\n");
    CHECK(missing_reason.code == ErrorCode::InvariantViolation);
    CHECK(missing_reason.line == 2);
    CHECK(missing_reason.field == "reason");

    auto bad_json = failure_of(good + encode_entry(entry(2)) + "\n{oops\n");
    CHECK(bad_json.code == ErrorCode::ParseError);
    CHECK(bad_json.line == 3);

    auto order = failure_of(good + good);
    CHECK(order.code == ErrorCode::InvariantViolation);
    CHECK(order.line == 2);
    CHECK(order.field == "sequence_no");

    CHECK(failure_of(line_with([](Json& j) { j["extra"] = 1; })).code == ErrorCode::InvariantViolation);
    CHECK(failure_of(line_with([](Json& j) { j["model_ids"] = {"a", "a"}; })).field == "model_ids");
    CHECK(failure_of(line_with([](Json& j) { j["concept"]["char_end"] = 3; })).field == "concept");
    CHECK(failure_of(line_with([](Json& j) { j.erase("session_id"); })).field == "session_id");
    CHECK(failure_of(line_with([](Json& j) { j["timestamp"] = "soon"; })).field == "timestamp");
    CHECK(failure_of(line_with([](Json& j) {
              j["reason"] = {{"category", "Disfluent"}, {"subtype", "RevealsAnswer"}};
              j["verdict"] = "Reject";
          })).code == ErrorCode::InvariantViolation);

    CHECK(parse_records("").empty());
    auto blank = failure_of(good + "\n");
    CHECK(blank.code == ErrorCode::ParseError);
    CHECK(blank.line == 2);
}

TEST_CASE("field mapping translates foreign names") {
    TempDir dir;
    write_file(dir / "map.json", R"({"worker":"annotator_id","label":"verdict"})");
    auto mapping = FieldMapping::load(dir / "map.json");
    const auto foreign = line_with([](Json& j) {
        j["worker"] = j["annotator_id"];
        j.erase("annotator_id");
        j["label"] = j["verdict"];
        j.erase("verdict");
    });
    CHECK(error_code_of([&] { parse_records(foreign); }) == ErrorCode::InvariantViolation);
    const auto parsed = parse_records(foreign, &mapping);
    REQUIRE(parsed.size() == 1);
    CHECK(parsed[0] == entry(1));

    write_file(dir / "bad.json", R"(["worker"])");
    CHECK(error_code_of([&] { FieldMapping::load(dir / "bad.json"); }) == ErrorCode::ConfigError);
}

TEST_CASE("missing files") {
    TempDir dir;
    CHECK(error_code_of([&] { import_records(dir / "absent.jsonl"); }) == ErrorCode::StorageFailure);
}

TEST_CASE("import_material truncates to the word limit") {
    TempDir dir;
    TopicCatalog catalog;
    const Topic topic{"t1", "Title", "https://example.org"};

    write_file(dir / "long.txt", words(700));
    auto m = import_material(topic, dir / "long.txt", catalog);
    CHECK(m.word_count == 500);
    CHECK(text::count_words(m.text) == 500);
    CHECK(catalog.material("t1")->text == m.text);

    write_file(dir / "short.txt", words(10));
    CHECK(import_material(topic, dir / "short.txt", catalog).word_count == 10);

    write_file(dir / "empty.txt", "  \n");
    CHECK(error_code_of([&] { import_material(topic, dir / "empty.txt", catalog); }) == ErrorCode::EmptyMaterial);
    CHECK(error_code_of([&] { import_material(topic, dir / "absent.txt", catalog); }) == ErrorCode::StorageFailure);
}

TEST_CASE("topics persist to a directory") {
    TempDir dir;
    TopicCatalog a;
    const Topic t1{"liberty", "Statue of Liberty", "https://en.wikipedia.org/wiki/Statue_of_Liberty"};
    const Topic t2{"dna", "DNA", "https://en.wikipedia.org/wiki/DNA"};
    save_topic(dir.path(), t1, load_material(t1, kLibertyText));
    save_topic(dir.path(), t2, load_material(t2, "Deoxyribonucleic acid is a polymer."));
    TopicCatalog b;
    load_topics(dir.path(), b);
    CHECK(b.topics().size() == 2);
    CHECK(*b.topic("liberty") == t1);
    CHECK(b.material("liberty")->text == kLibertyText);
    CHECK(b.material("dna")->word_count == 5);
    CHECK(error_code_of([&] { save_topic(dir.path(), Topic{"../x", "X", ""}, *b.material("dna")); }) ==
          ErrorCode::PreconditionViolation);
}
