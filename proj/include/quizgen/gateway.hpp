#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "quizgen/domain.hpp"

namespace quizgen {

inline constexpr int kDefaultMaxNewTokens = 30;

struct GenerationRequest {
    std::string context;
    std::string answer;
    int max_new_tokens = kDefaultMaxNewTokens;
    std::string request_id;
};

/// Wire encoding: {"context","answer","max_new_tokens","request_id"} in that order.
std::string encode_request(const GenerationRequest& req);

/// Throws ParseError / PreconditionViolation on a body that is not a valid request.
GenerationRequest decode_request(std::string_view body);

std::string encode_response(std::string_view question, std::string_view model_id);

enum class Outcome { Ok, Timeout, Failure };

std::string_view label(Outcome o) noexcept;

struct GenerationResult {
    ModelId model_id;
    Outcome outcome = Outcome::Failure;
    std::string question;  // set iff Ok
    std::string message;   // set iff Failure
    std::int64_t latency_ms = 0;

    bool ok() const noexcept { return outcome == Outcome::Ok; }
};

/// Raw transport reply. HTTP backends report the status line and body as
/// received; in-process backends produce the same shape.
struct BackendReply {
    int status = 0;
    std::string body;
};

/// Maps a transport reply to a result: non-200 status, unparsable JSON or a
/// body without a non-empty string "question" becomes Failure.
GenerationResult interpret_reply(const ModelId& model_id, const BackendReply& reply,
                                 std::int64_t latency_ms);

class Backend {
public:
    virtual ~Backend() = default;

    /// Blocking call. `budget` is advisory: implementations with their own
    /// I/O timeouts should not wait much longer than it.
    virtual BackendReply call(const GenerationRequest& req, std::chrono::milliseconds budget) = 0;
};

// ---------------------------------------------------------------------------
// Deterministic in-process backend
// ---------------------------------------------------------------------------

inline constexpr std::string_view kDefaultMockTemplate = "What is the significance of {answer}?";

struct MockBehavior {
    ModelId model_id;
    /// "{answer}" is replaced by the request's answer.
    std::string question_template{kDefaultMockTemplate};
    /// Keyed by answer; takes precedence over the template.
    std::map<std::string, std::string> canned;
    std::chrono::milliseconds delay{0};
    /// When set the backend replies 500 with this message.
    std::optional<std::string> error;
    /// When set the backend replies 200 with this body verbatim.
    std::optional<std::string> raw_body;
};

class MockBackend final : public Backend {
public:
    explicit MockBackend(MockBehavior behavior) : behavior_(std::move(behavior)) {}

    BackendReply call(const GenerationRequest& req, std::chrono::milliseconds budget) override;

    /// The question this backend would produce for `answer`, ignoring delay and errors.
    std::string question_for(std::string_view answer) const;

    const MockBehavior& behavior() const noexcept { return behavior_; }

private:
    MockBehavior behavior_;
};

std::shared_ptr<Backend> mock_backend(MockBehavior behavior);

// ---------------------------------------------------------------------------
// HTTP backend speaking POST /generate
// ---------------------------------------------------------------------------

class HttpBackend final : public Backend {
public:
    /// `endpoint` is "http://host[:port][/base]"; requests go to base + "/generate".
    explicit HttpBackend(std::string endpoint, std::chrono::milliseconds io_slack = std::chrono::milliseconds(50));

    BackendReply call(const GenerationRequest& req, std::chrono::milliseconds budget) override;

private:
    std::string origin_;
    std::string path_;
    std::chrono::milliseconds io_slack_;
};

/// Resolves descriptors to backends. Explicit registrations by model_id win;
/// otherwise "mock:" endpoints get a default-template mock and "http://"
/// endpoints an HttpBackend. Thread-safe.
class BackendRegistry {
public:
    void add(const ModelId& model_id, std::shared_ptr<Backend> backend);

    /// Throws ConfigError for an unsupported endpoint scheme.
    std::shared_ptr<Backend> resolve(const ModelDescriptor& model);

private:
    std::mutex mu_;
    std::map<ModelId, std::shared_ptr<Backend>> backends_;
};

// ---------------------------------------------------------------------------
// Deadline-bounded fan-out
// ---------------------------------------------------------------------------

struct GatewayConfig {
    std::chrono::milliseconds deadline{200};
    /// Declared bound on fan-out overhead beyond the deadline.
    std::chrono::milliseconds overhead{50};
};

/// Issues one concurrent request per backend and joins them against a
/// deadline. A response arriving after the deadline is discarded; its worker
/// thread is reaped later and joined at destruction.
class ModelGateway {
public:
    explicit ModelGateway(std::shared_ptr<BackendRegistry> registry, GatewayConfig config = {});
    ~ModelGateway();

    ModelGateway(const ModelGateway&) = delete;
    ModelGateway& operator=(const ModelGateway&) = delete;

    const GatewayConfig& config() const noexcept { return config_; }

    GenerationResult generate(const ModelDescriptor& backend, const GenerationRequest& req,
                              std::chrono::milliseconds deadline);

    /// One result per backend in configuration order. Throws
    /// PreconditionViolation for an empty backend list or an invalid request.
    std::vector<GenerationResult> fan_out(std::span<const ModelDescriptor> backends,
                                          const GenerationRequest& req,
                                          std::optional<std::chrono::milliseconds> deadline = std::nullopt);

    /// Worker threads still running past their deadline.
    std::size_t stragglers();

private:
    struct Call;

    std::shared_ptr<Call> launch(std::shared_ptr<Backend> backend, const GenerationRequest& req,
                                 std::chrono::milliseconds budget);
    void retire(std::shared_ptr<Call> call);
    void reap();

    std::shared_ptr<BackendRegistry> registry_;
    GatewayConfig config_;
    std::mutex mu_;
    std::vector<std::shared_ptr<Call>> in_flight_;
};

}  // namespace quizgen
