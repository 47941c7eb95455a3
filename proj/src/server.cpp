#include "quizgen/server.hpp"

#include <httplib.h>

#include <charconv>
#include <regex>

namespace quizgen {

int http_status(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::UnknownSession:
        case ErrorCode::UnknownTopic:
            return 404;
        case ErrorCode::InvalidState:
        case ErrorCode::AlreadyJudged:
            return 409;
        case ErrorCode::AllBackendsFailed:
            return 424;
        case ErrorCode::OffsetsOutOfRange:
        case ErrorCode::BlankSelection:
        case ErrorCode::UnknownReason:
        case ErrorCode::InvalidRecord:
        case ErrorCode::EmptyMaterial:
        case ErrorCode::UnknownCandidate:
        case ErrorCode::PreconditionViolation:
        case ErrorCode::ParseError:
            return 400;
        default:
            return 500;
    }
}

Json error_body(std::string_view code, std::string_view message) {
    return Json{{"error_code", code}, {"message", message}};
}

Json public_batch_json(const PresentationBatch& batch) {
    Json candidates = Json::array();
    for (const auto& c : batch.candidates) {
        candidates.push_back(Json{{"text", c.text}, {"presentation_index", c.presentation_index}});
    }
    return Json{{"concept", to_json(batch.selection)},
                {"candidates", candidates},
                {"shuffle_seed", batch.shuffle_seed},
                {"warnings", to_json(batch.warnings)}};
}

Json public_record_json(const AnnotationRecord& r) {
    return Json{{"annotator_id", r.annotator_id},
                {"topic_id", r.topic_id},
                {"concept", to_json(r.selection)},
                {"question_text", r.question_text},
                {"judgment", to_json(r.judgment)},
                {"timestamp", format_timestamp(r.timestamp)}};
}

Json public_session_json(const QuizSession& s) {
    Json records = Json::array();
    for (const auto& r : s.judged_records) records.push_back(public_record_json(r));
    Json accepted = Json::array();
    for (const auto& a : s.accepted_questions) accepted.push_back(to_json(a));
    return Json{{"session_id", s.session_id},
                {"annotator_id", s.annotator_id},
                {"topic_id", s.topic_id},
                {"state", label(s.state)},
                {"judged_records", records},
                {"accepted_questions", accepted}};
}

Json summary_json(const QuizSummary& q) {
    Json questions = Json::array();
    for (const auto& a : q.questions) questions.push_back(to_json(a));
    return Json{{"session_id", q.session_id},
                {"annotator_id", q.annotator_id},
                {"topic_id", q.topic_id},
                {"state", label(SessionState::Finalized)},
                {"concept_count", q.concept_count},
                {"questions", questions},
                {"warnings", to_json(q.warnings)}};
}

ApiRouter::ApiRouter(Orchestrator& orchestrator, const TopicCatalog& catalog)
    : orchestrator_(orchestrator), catalog_(catalog) {}

namespace {

ApiResponse reply(int status, const Json& j) { return ApiResponse{status, j.dump()}; }

Json parse_body(std::string_view body) {
    try {
        auto j = Json::parse(body);
        if (!j.is_object()) throw Error(ErrorCode::ParseError, "request body must be a JSON object");
        return j;
    } catch (const Json::parse_error& e) {
        throw Error(ErrorCode::ParseError, std::string("request body is not valid JSON: ") + e.what());
    }
}

const Json& member(const Json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end()) throw Error(ErrorCode::PreconditionViolation, std::string(key) + " is required");
    return *it;
}

std::string string_member(const Json& j, const char* key) {
    const auto& v = member(j, key);
    if (!v.is_string()) throw Error(ErrorCode::PreconditionViolation, std::string(key) + " must be a string");
    return v.get<std::string>();
}

std::int64_t int_member(const Json& j, const char* key) {
    const auto& v = member(j, key);
    if (v.is_number_unsigned()) {
        const auto u = v.get<std::uint64_t>();
        if (u > static_cast<std::uint64_t>(INT64_MAX)) {
            throw Error(ErrorCode::OffsetsOutOfRange, std::string(key) + " is out of range");
        }
        return static_cast<std::int64_t>(u);
    }
    if (!v.is_number_integer()) throw Error(ErrorCode::PreconditionViolation, std::string(key) + " must be an integer");
    return v.get<std::int64_t>();
}

Judgment parse_judgment(const Json& body) {
    const auto verdict = string_member(body, "verdict");
    const bool has_reason = body.contains("reason") && !body.at("reason").is_null();
    if (verdict == "Accept") {
        if (has_reason) throw Error(ErrorCode::InvalidRecord, "Accept must not carry a reason");
        return Judgment::accept();
    }
    if (verdict != "Reject") throw Error(ErrorCode::InvalidRecord, "verdict must be Accept or Reject");
    if (!has_reason) throw Error(ErrorCode::InvalidRecord, "Reject requires a reason");
    const auto& reason = body.at("reason");
    if (!reason.is_object()) throw Error(ErrorCode::UnknownReason, "reason must be {category, subtype}");
    return Judgment::reject(validate_reason(string_member(reason, "category"), string_member(reason, "subtype")));
}

}  // namespace

ApiResponse ApiRouter::handle(std::string_view method, std::string_view path, std::string_view body) const {
    static const std::regex kMaterial("^/topics/([^/]+)/material$");
    static const std::regex kSessionAction("^/sessions/([^/]+)/(concepts|judgments|finalize)$");
    const std::string p(path);
    std::smatch m;
    try {
        if (p == "/topics") {
            if (method != "GET") return reply(405, error_body("MethodNotAllowed", "use GET"));
            Json arr = Json::array();
            for (const auto& t : catalog_.topics()) arr.push_back(to_json(t));
            return reply(200, arr);
        }
        if (std::regex_match(p, m, kMaterial)) {
            if (method != "GET") return reply(405, error_body("MethodNotAllowed", "use GET"));
            auto material = catalog_.material(m[1]);
            if (!material) throw Error(ErrorCode::UnknownTopic, "unknown topic " + m[1].str());
            return reply(200, to_json(*material));
        }
        if (p == "/sessions") {
            if (method != "POST") return reply(405, error_body("MethodNotAllowed", "use POST"));
            const auto j = parse_body(body);
            auto session = orchestrator_.create_session(string_member(j, "annotator_id"), string_member(j, "topic_id"));
            orchestrator_.load_material(session.session_id);
            return reply(201, public_session_json(orchestrator_.session(session.session_id)));
        }
        if (std::regex_match(p, m, kSessionAction)) {
            if (method != "POST") return reply(405, error_body("MethodNotAllowed", "use POST"));
            const std::string id = m[1];
            const std::string action = m[2];
            if (action == "concepts") {
                const auto j = parse_body(body);
                auto batch =
                    orchestrator_.present_candidates(id, int_member(j, "char_start"), int_member(j, "char_end"));
                return reply(200, public_batch_json(batch));
            }
            if (action == "judgments") {
                const auto j = parse_body(body);
                const auto index = int_member(j, "presentation_index");
                if (index < 0) throw Error(ErrorCode::UnknownCandidate, "presentation_index must be >= 0");
                auto record = orchestrator_.record_judgment(id, static_cast<std::size_t>(index), parse_judgment(j));
                const auto session = orchestrator_.session(id);
                const auto batch = orchestrator_.current_batch(id);
                return reply(200, Json{{"record", public_record_json(record)},
                                       {"presentation_index", index},
                                       {"state", label(session.state)},
                                       {"accepted_count", session.accepted_questions.size()},
                                       {"batch_complete", !batch.has_value()}});
            }
            return reply(200, summary_json(orchestrator_.finalize_quiz(id)));
        }
        return reply(404, error_body("NotFound", "no route for " + p));
    } catch (const Error& e) {
        return reply(http_status(e.code()), error_body(to_string(e.code()), e.what()));
    } catch (const std::exception& e) {
        return reply(500, error_body("InternalError", e.what()));
    }
}

// ---------------------------------------------------------------------------
// HTTP transport
// ---------------------------------------------------------------------------

struct ApiServer::Impl {
    const ApiRouter& router;
    httplib::Server server;

    explicit Impl(const ApiRouter& r) : router(r) {
        auto handler = [this](const httplib::Request& req, httplib::Response& res) {
            const auto out = router.handle(req.method, req.path, req.body);
            res.status = out.status;
            res.set_content(out.body, "application/json");
        };
        server.Get(".*", handler);
        server.Post(".*", handler);
        server.Put(".*", handler);
        server.Delete(".*", handler);
        server.Patch(".*", handler);
    }
};

ApiServer::ApiServer(const ApiRouter& router) : impl_(std::make_unique<Impl>(router)) {}

ApiServer::~ApiServer() { stop(); }

int ApiServer::bind(const std::string& host, int port) {
    int bound = -1;
    if (port == 0) {
        bound = impl_->server.bind_to_any_port(host);
    } else if (impl_->server.bind_to_port(host, port)) {
        bound = port;
    }
    if (bound < 0) throw Error(ErrorCode::ConfigError, "cannot listen on " + host + ":" + std::to_string(port));
    return bound;
}

void ApiServer::run() { impl_->server.listen_after_bind(); }

void ApiServer::stop() {
    if (impl_) impl_->server.stop();
}

}  // namespace quizgen
