#pragma once

#include <memory>
#include <string>
#include <string_view>

#include "quizgen/domain_json.hpp"
#include "quizgen/error.hpp"
#include "quizgen/orchestrator.hpp"

namespace quizgen {

struct ApiResponse {
    int status = 200;
    std::string body;
};

/// 400 for validation failures, 404 for unknown sessions and topics, 409 for
/// state conflicts, 424 when every backend failed, 500 otherwise.
int http_status(ErrorCode code) noexcept;

/// {"error_code": ..., "message": ...}
Json error_body(std::string_view code, std::string_view message);

/// The REST API as a pure request -> response mapping. Responses never carry
/// model identifiers, latencies or excluded backends.
class ApiRouter {
public:
    ApiRouter(Orchestrator& orchestrator, const TopicCatalog& catalog);

    ApiResponse handle(std::string_view method, std::string_view path, std::string_view body) const;

private:
    Orchestrator& orchestrator_;
    const TopicCatalog& catalog_;
};

/// Candidate batch as shown to annotators.
Json public_batch_json(const PresentationBatch& batch);

/// Record as shown to annotators (no model_ids).
Json public_record_json(const AnnotationRecord& record);

Json public_session_json(const QuizSession& session);

Json summary_json(const QuizSummary& summary);

/// Serves an ApiRouter over HTTP.
class ApiServer {
public:
    explicit ApiServer(const ApiRouter& router);
    ~ApiServer();

    ApiServer(const ApiServer&) = delete;
    ApiServer& operator=(const ApiServer&) = delete;

    /// Returns the bound port; port 0 picks a free one. Throws ConfigError.
    int bind(const std::string& host, int port);

    /// Blocks until stop().
    void run();

    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace quizgen
