#include <doctest.h>

#include <random>

#include "quizgen/domain.hpp"
#include "quizgen/domain_json.hpp"
#include "quizgen/text.hpp"
#include "support.hpp"

using namespace quizgen;
using namespace quizgen::testing;

TEST_CASE("whitespace helpers") {
    CHECK(text::trim("  a b \n") == "a b");
    CHECK(text::count_words("") == 0);
    CHECK(text::count_words(" one\ttwo\nthree  ") == 3);
    CHECK(text::normalize_whitespace("  Who  built\t it? ") == "Who built it?");
    CHECK(text::is_blank(" \t\r\n"));
    CHECK_FALSE(text::is_blank(" x "));
}

TEST_CASE("first_words keeps a prefix ending at the last kept word") {
    CHECK(text::first_words("a b c", 2) == "a b");
    CHECK(text::first_words("  a  b c", 2) == "  a  b");
    CHECK(text::first_words("a b", 5) == "a b");
    CHECK(text::first_words("a b ", 2) == "a b ");
}

TEST_CASE("code point offsets") {
    const std::string s = "caf\xC3\xA9 \xE2\x82\xAC" "1";  // "café €1"
    CHECK(text::codepoint_length(s) == 7);
    CHECK(text::byte_offset(s, 3) == 3);
    CHECK(text::byte_offset(s, 4) == 5);
    CHECK(text::byte_offset(s, 6) == 9);
    CHECK(text::byte_offset(s, 7) == s.size());
    CHECK(text::byte_offset(s, 8) == std::string_view::npos);
    CHECK(text::is_valid_utf8(s));
    CHECK_FALSE(text::is_valid_utf8("\xC3"));
}

TEST_CASE("validate_concept extracts the span") {
    ReadingMaterial m{"liberty", "The Statue of Liberty is a colossal sculpture.", 8};
    auto v = validate_concept(m, 4, 21);
    CHECK(v.selection.answer_text == "Statue of Liberty");
    CHECK(v.selection.word_count == 3);
    CHECK(v.selection.material_ref == "liberty");
    CHECK(v.warnings.empty());

    CHECK(error_code_of([&] { validate_concept(m, 50, 40); }) == ErrorCode::OffsetsOutOfRange);
    CHECK(error_code_of([&] { validate_concept(m, 3, 3); }) == ErrorCode::OffsetsOutOfRange);
    CHECK(error_code_of([&] { validate_concept(m, -1, 3); }) == ErrorCode::OffsetsOutOfRange);
    CHECK(error_code_of([&] { validate_concept(m, 0, 47); }) == ErrorCode::OffsetsOutOfRange);
    CHECK(error_code_of([&] { validate_concept(m, 3, 4); }) == ErrorCode::BlankSelection);
    CHECK(error_code_of([&] { validate_concept(ReadingMaterial{"t", "", 0}, 0, 1); }) == ErrorCode::EmptyMaterial);
}

TEST_CASE("long concepts warn but are accepted") {
    ReadingMaterial m{"t", "one two three four five six seven eight nine ten", 10};
    auto v = validate_concept(m, 0, static_cast<std::int64_t>(m.text.size()));
    CHECK(v.selection.word_count == 10);
    REQUIRE(v.warnings.size() == 1);
    CHECK(v.warnings[0].code == "concept_too_long");
    CHECK(v.warnings[0].message == "concept longer than 8 words");
}

TEST_CASE("validate_concept counts code points") {
    ReadingMaterial m{"t", "Caf\xC3\xA9 Paris", 2};
    CHECK(validate_concept(m, 5, 10).selection.answer_text == "Paris");
    CHECK(validate_concept(m, 0, 4).selection.answer_text == "Caf\xC3\xA9");
}

TEST_CASE("property: answer_text is the material substring at the offsets") {
    ReadingMaterial m{"t", "Alpha beta  gamma, delta. Epsilon\tzeta eta theta iota kappa.", 0};
    m.word_count = text::count_words(m.text);
    const auto n = static_cast<std::int64_t>(text::codepoint_length(m.text));
    std::mt19937_64 rng(7);
    for (int i = 0; i < 2000; ++i) {
        const auto s = static_cast<std::int64_t>(rng() % (n + 2)) - 1;
        const auto e = static_cast<std::int64_t>(rng() % (n + 2)) - 1;
        try {
            auto v = validate_concept(m, s, e);
            CHECK(v.selection.answer_text == m.text.substr(s, e - s));
            CHECK_FALSE(text::is_blank(v.selection.answer_text));
        } catch (const Error& err) {
            const bool bad_offsets = s < 0 || e > n || s >= e;
            CHECK(err.code() == (bad_offsets ? ErrorCode::OffsetsOutOfRange : ErrorCode::BlankSelection));
        }
    }
}

TEST_CASE("validate_reason") {
    CHECK(validate_reason("WrongContext", "RevealsAnswer").subtype() == ErrorSubtype::RevealsAnswer);
    CHECK(validate_reason("OffTarget", "OtherAnswerSpan").category() == ErrorCategory::OffTarget);
    CHECK(error_code_of([] { validate_reason("Disfluent", "Unanswerable"); }) == ErrorCode::UnknownReason);
    CHECK(error_code_of([] { validate_reason("wrongcontext", "RevealsAnswer"); }) == ErrorCode::UnknownReason);
}

TEST_CASE("taxonomy is the fixed 3 x 10 tree") {
    const auto& t = taxonomy();
    REQUIRE(t.size() == 3);
    CHECK(t[0].label == "Disfluent");
    CHECK(t[1].label == "OffTarget");
    CHECK(t[2].label == "WrongContext");
    std::size_t leaves = 0;
    for (const auto& c : t) {
        for (const auto& l : c.leaves) {
            CHECK(parent_of(l.subtype) == c.category);
            ++leaves;
        }
    }
    CHECK(leaves == 10);
    CHECK(t[0].leaves[0].display_name == "Wrong Tense");
    CHECK(t[2].leaves[3].label == "NotSpecificEnough");
    CHECK(&taxonomy() == &t);
    CHECK(taxonomy_json() == taxonomy_json());
}

TEST_CASE("judgments carry a reason iff rejected") {
    auto a = Judgment::accept();
    CHECK(a.accepted());
    CHECK_FALSE(a.reason().has_value());
    auto r = reject(ErrorSubtype::TooSpecific);
    CHECK(r.verdict() == Verdict::Reject);
    REQUIRE(r.reason().has_value());
    CHECK(r.reason()->category() == ErrorCategory::WrongContext);
}

TEST_CASE("record JSON round-trips for every judgment") {
    std::vector<Judgment> judgments{Judgment::accept()};
    for (const auto& c : taxonomy()) {
        for (const auto& l : c.leaves) judgments.push_back(Judgment::reject(ErrorReason(l.subtype)));
    }
    for (const auto& j : judgments) {
        auto rec = record("ann-1", "liberty", "Statue of Libert\xC3\xA9", "Who built it?", {"m1", "m2"}, j, 42);
        auto back = record_from_json(to_json(rec));
        CHECK(back == rec);
    }
}

TEST_CASE("record parsing rejects invariant violations") {
    auto rec = record("a", "t", "Paris", "Where?", {"m"}, Judgment::accept());
    auto j = to_json(rec);
    auto field_of = [](const Json& bad) -> std::string {
        try {
            record_from_json(bad);
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::InvalidRecord);
            return e.field().value_or("");
        }
        return "<accepted>";
    };
    auto bad = j;
    bad["judgment"] = Json{{"verdict", "Reject"}};
    CHECK(field_of(bad) == "reason");
    bad = j;
    bad["judgment"] = Json{{"verdict", "Accept"}, {"reason", {{"category", "Disfluent"}, {"subtype", "Repetition"}}}};
    CHECK(field_of(bad) == "reason");
    bad = j;
    bad["question_text"] = "";
    CHECK(field_of(bad) == "question_text");
    bad = j;
    bad["model_ids"] = Json::array();
    CHECK(field_of(bad) == "model_ids");
    bad = j;
    bad["concept"]["char_end"] = 9;
    CHECK(field_of(bad) == "concept");
    bad = j;
    bad["timestamp"] = "yesterday";
    CHECK(field_of(bad) == "timestamp");
    bad = j;
    bad.erase("annotator_id");
    CHECK(field_of(bad) == "annotator_id");
}

TEST_CASE("timestamps") {
    const auto t = at(0);
    const auto s = format_timestamp(t);
    CHECK(s == "2023-11-14T22:13:20Z");
    CHECK(parse_timestamp(s) == t);
    CHECK_FALSE(parse_timestamp("2023-11-14 22:13:20Z").has_value());
    CHECK_FALSE(parse_timestamp("2023-13-14T22:13:20Z").has_value());
}

TEST_CASE("model ids must be unique") {
    std::vector<ModelDescriptor> ms{{"a", "mock:", "A"}, {"b", "mock:", "B"}};
    CHECK_NOTHROW(check_unique_models(ms));
    ms.push_back({"a", "mock:", "A2"});
    CHECK(error_code_of([&] { check_unique_models(ms); }) == ErrorCode::ConfigError);
}
