#include "quizgen/domain_json.hpp"

#include "quizgen/error.hpp"
#include "quizgen/text.hpp"

namespace quizgen {

namespace {

[[noreturn]] void bad_field(const std::string& field, const std::string& why) {
    throw Error(ErrorCode::InvalidRecord, field + ": " + why, 0, field);
}

const Json& field(const Json& j, const char* key) {
    if (!j.is_object()) bad_field(key, "enclosing value is not an object");
    auto it = j.find(key);
    if (it == j.end()) bad_field(key, "missing");
    return *it;
}

std::string string_field(const Json& j, const char* key) {
    const auto& v = field(j, key);
    if (!v.is_string()) bad_field(key, "expected string");
    return v.get<std::string>();
}

std::size_t size_field(const Json& j, const char* key) {
    const auto& v = field(j, key);
    if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<std::int64_t>() < 0)) {
        bad_field(key, "expected non-negative integer");
    }
    return v.get<std::size_t>();
}

ModelIdSet model_set(const Json& j, const char* key) {
    const auto& v = field(j, key);
    if (!v.is_array()) bad_field(key, "expected array");
    ModelIdSet out;
    for (const auto& e : v) {
        if (!e.is_string()) bad_field(key, "expected array of strings");
        out.insert(e.get<std::string>());
    }
    return out;
}

Json model_array(const ModelIdSet& ids) {
    Json arr = Json::array();
    for (const auto& id : ids) arr.push_back(id);
    return arr;
}

}  // namespace

Json to_json(const Topic& v) {
    return Json{{"id", v.id}, {"title", v.title}, {"source_uri", v.source_uri}};
}

Json to_json(const ReadingMaterial& v) {
    return Json{{"topic_id", v.topic_id}, {"text", v.text}, {"word_count", v.word_count}};
}

Json to_json(const ConceptSelection& v) {
    return Json{{"material_ref", v.material_ref},
                {"char_start", v.char_start},
                {"char_end", v.char_end},
                {"answer_text", v.answer_text},
                {"word_count", v.word_count}};
}

Json to_json(const CandidateQuestion& v) {
    Json latency = Json::object();
    for (const auto& [id, ms] : v.latency_ms) latency[id] = ms;
    return Json{{"text", v.text},
                {"model_ids", model_array(v.model_ids)},
                {"latency_ms", latency},
                {"presentation_index", v.presentation_index}};
}

Json to_json(const ErrorReason& v) {
    return Json{{"category", label(v.category())}, {"subtype", label(v.subtype())}};
}

Json to_json(const Judgment& v) {
    Json j{{"verdict", label(v.verdict())}};
    if (v.reason()) j["reason"] = to_json(*v.reason());
    return j;
}

Json to_json(const AnnotationRecord& v) {
    return Json{{"annotator_id", v.annotator_id},
                {"topic_id", v.topic_id},
                {"concept", to_json(v.selection)},
                {"question_text", v.question_text},
                {"model_ids", model_array(v.model_ids)},
                {"judgment", to_json(v.judgment)},
                {"timestamp", format_timestamp(v.timestamp)}};
}

Json to_json(const AcceptedQuestion& v) {
    return Json{{"concept", to_json(v.selection)}, {"question_text", v.question_text}};
}

Json to_json(const QuizSession& v) {
    Json records = Json::array();
    for (const auto& r : v.judged_records) records.push_back(to_json(r));
    Json accepted = Json::array();
    for (const auto& a : v.accepted_questions) accepted.push_back(to_json(a));
    return Json{{"session_id", v.session_id},
                {"annotator_id", v.annotator_id},
                {"topic_id", v.topic_id},
                {"state", label(v.state)},
                {"judged_records", records},
                {"accepted_questions", accepted}};
}

Json to_json(const ModelDescriptor& v) {
    return Json{{"model_id", v.model_id}, {"endpoint", v.endpoint}, {"display_name", v.display_name}};
}

Json to_json(const Warning& v) { return Json{{"code", v.code}, {"message", v.message}}; }

Json to_json(const std::vector<Warning>& v) {
    Json arr = Json::array();
    for (const auto& w : v) arr.push_back(to_json(w));
    return arr;
}

Topic topic_from_json(const Json& j) {
    Topic t{string_field(j, "id"), string_field(j, "title"), string_field(j, "source_uri")};
    if (t.id.empty()) bad_field("id", "must be non-empty");
    return t;
}

ReadingMaterial material_from_json(const Json& j) {
    ReadingMaterial m{string_field(j, "topic_id"), string_field(j, "text"), size_field(j, "word_count")};
    if (m.word_count != text::count_words(m.text)) bad_field("word_count", "disagrees with text");
    return m;
}

ConceptSelection concept_from_json(const Json& j) {
    ConceptSelection c;
    c.material_ref = j.contains("material_ref") ? string_field(j, "material_ref") : std::string{};
    c.char_start = size_field(j, "char_start");
    c.char_end = size_field(j, "char_end");
    c.answer_text = string_field(j, "answer_text");
    c.word_count = text::count_words(c.answer_text);
    if (j.contains("word_count") && size_field(j, "word_count") != c.word_count) {
        bad_field("word_count", "disagrees with answer_text");
    }
    return c;
}

ErrorReason reason_from_json(const Json& j) {
    if (!j.is_object()) bad_field("reason", "expected object");
    const auto category = string_field(j, "category");
    const auto subtype = string_field(j, "subtype");
    try {
        return validate_reason(category, subtype);
    } catch (const Error& e) {
        bad_field("reason", e.what());
    }
}

Judgment judgment_from_json(const Json& j) {
    const auto verdict = string_field(j, "verdict");
    const bool has_reason = j.contains("reason") && !j.at("reason").is_null();
    if (verdict == "Accept") {
        if (has_reason) bad_field("reason", "Accept must not carry a reason");
        return Judgment::accept();
    }
    if (verdict == "Reject") {
        if (!has_reason) bad_field("reason", "Reject requires a reason");
        return Judgment::reject(reason_from_json(j.at("reason")));
    }
    bad_field("verdict", "expected Accept or Reject");
}

AnnotationRecord record_from_json(const Json& j) {
    AnnotationRecord r;
    r.annotator_id = string_field(j, "annotator_id");
    r.topic_id = string_field(j, "topic_id");
    r.selection = concept_from_json(field(j, "concept"));
    r.question_text = string_field(j, "question_text");
    r.model_ids = model_set(j, "model_ids");
    r.judgment = judgment_from_json(field(j, "judgment"));
    auto ts = parse_timestamp(string_field(j, "timestamp"));
    if (!ts) bad_field("timestamp", "expected YYYY-MM-DDTHH:MM:SSZ");
    r.timestamp = *ts;
    check_record(r);
    return r;
}

ModelDescriptor model_from_json(const Json& j) {
    ModelDescriptor m{string_field(j, "model_id"), string_field(j, "endpoint"), {}};
    m.display_name = j.contains("display_name") ? string_field(j, "display_name") : m.model_id;
    if (m.model_id.empty()) bad_field("model_id", "must be non-empty");
    return m;
}

Json taxonomy_json() {
    Json out = Json::array();
    for (const auto& cat : taxonomy()) {
        Json leaves = Json::array();
        for (const auto& leaf : cat.leaves) {
            leaves.push_back(Json{{"subtype", leaf.label}, {"display_name", leaf.display_name}});
        }
        out.push_back(Json{{"category", cat.label}, {"display_name", cat.display_name}, {"subtypes", leaves}});
    }
    return out;
}

}  // namespace quizgen
