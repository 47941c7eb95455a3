#include "quizgen/gateway.hpp"

#include <algorithm>
#include <condition_variable>

#include <json.hpp>

#include "quizgen/error.hpp"

namespace quizgen {

using Json = nlohmann::ordered_json;
using Clock = std::chrono::steady_clock;

std::string encode_request(const GenerationRequest& req) {
    Json j{{"context", req.context},
           {"answer", req.answer},
           {"max_new_tokens", req.max_new_tokens},
           {"request_id", req.request_id}};
    return j.dump();
}

GenerationRequest decode_request(std::string_view body) {
    Json j = Json::parse(body, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw Error(ErrorCode::ParseError, "request body is not a JSON object");
    auto str = [&](const char* key) {
        auto it = j.find(key);
        if (it == j.end() || !it->is_string()) {
            throw Error(ErrorCode::PreconditionViolation, std::string("missing string field ") + key);
        }
        return it->get<std::string>();
    };
    GenerationRequest req;
    req.context = str("context");
    req.answer = str("answer");
    req.request_id = str("request_id");
    auto it = j.find("max_new_tokens");
    if (it == j.end() || !it->is_number_integer()) {
        throw Error(ErrorCode::PreconditionViolation, "missing integer field max_new_tokens");
    }
    req.max_new_tokens = it->get<int>();
    if (req.context.empty() || req.answer.empty() || req.max_new_tokens <= 0) {
        throw Error(ErrorCode::PreconditionViolation, "request violates field constraints");
    }
    return req;
}

std::string encode_response(std::string_view question, std::string_view model_id) {
    return Json{{"question", question}, {"model_id", model_id}}.dump();
}

std::string_view label(Outcome o) noexcept {
    switch (o) {
        case Outcome::Ok: return "Ok";
        case Outcome::Timeout: return "Timeout";
        case Outcome::Failure: return "Failure";
    }
    return {};
}

GenerationResult interpret_reply(const ModelId& model_id, const BackendReply& reply,
                                 std::int64_t latency_ms) {
    GenerationResult r{model_id, Outcome::Failure, {}, {}, latency_ms};
    if (reply.status != 200) {
        r.message = "backend returned status " + std::to_string(reply.status);
        return r;
    }
    Json j = Json::parse(reply.body, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
        r.message = "unparsable response body";
        return r;
    }
    auto q = j.find("question");
    if (q == j.end() || !q->is_string() || q->get<std::string>().empty()) {
        r.message = "response lacks a non-empty \"question\"";
        return r;
    }
    auto m = j.find("model_id");
    if (m == j.end() || !m->is_string()) {
        r.message = "response lacks \"model_id\"";
        return r;
    }
    r.outcome = Outcome::Ok;
    r.question = q->get<std::string>();
    return r;
}

// ---------------------------------------------------------------------------

std::string MockBackend::question_for(std::string_view answer) const {
    if (auto it = behavior_.canned.find(std::string(answer)); it != behavior_.canned.end()) {
        return it->second;
    }
    std::string out = behavior_.question_template;
    constexpr std::string_view kSlot = "{answer}";
    for (auto pos = out.find(kSlot); pos != std::string::npos; pos = out.find(kSlot, pos + answer.size())) {
        out.replace(pos, kSlot.size(), answer);
    }
    return out;
}

BackendReply MockBackend::call(const GenerationRequest& req, std::chrono::milliseconds) {
    if (behavior_.delay.count() > 0) std::this_thread::sleep_for(behavior_.delay);
    if (behavior_.error) return {500, Json{{"error", *behavior_.error}}.dump()};
    if (behavior_.raw_body) return {200, *behavior_.raw_body};
    return {200, encode_response(question_for(req.answer), behavior_.model_id)};
}

std::shared_ptr<Backend> mock_backend(MockBehavior behavior) {
    return std::make_shared<MockBackend>(std::move(behavior));
}

// ---------------------------------------------------------------------------

void BackendRegistry::add(const ModelId& model_id, std::shared_ptr<Backend> backend) {
    std::lock_guard lock(mu_);
    backends_[model_id] = std::move(backend);
}

std::shared_ptr<Backend> BackendRegistry::resolve(const ModelDescriptor& model) {
    std::lock_guard lock(mu_);
    if (auto it = backends_.find(model.model_id); it != backends_.end()) return it->second;
    std::shared_ptr<Backend> backend;
    if (model.endpoint.rfind("mock:", 0) == 0) {
        MockBehavior behavior;
        behavior.model_id = model.model_id;
        backend = mock_backend(std::move(behavior));
    } else if (model.endpoint.rfind("http://", 0) == 0) {
        backend = std::make_shared<HttpBackend>(model.endpoint);
    } else {
        throw Error(ErrorCode::ConfigError, "unsupported endpoint for " + model.model_id + ": " + model.endpoint);
    }
    backends_[model.model_id] = backend;
    return backend;
}

// ---------------------------------------------------------------------------

struct ModelGateway::Call {
    std::thread worker;
    std::mutex mu;
    std::condition_variable cv;
    bool done = false;
    BackendReply reply;
    std::optional<std::string> error;
    std::int64_t latency_ms = 0;
};

ModelGateway::ModelGateway(std::shared_ptr<BackendRegistry> registry, GatewayConfig config)
    : registry_(std::move(registry)), config_(config) {}

ModelGateway::~ModelGateway() {
    std::lock_guard lock(mu_);
    for (auto& call : in_flight_) {
        if (call->worker.joinable()) call->worker.join();
    }
}

std::shared_ptr<ModelGateway::Call> ModelGateway::launch(std::shared_ptr<Backend> backend,
                                                         const GenerationRequest& req,
                                                         std::chrono::milliseconds budget) {
    auto call = std::make_shared<Call>();
    // The worker only holds a raw pointer: the Call outlives it because every
    // Call is either joined in place or parked in in_flight_ until joined.
    call->worker = std::thread([c = call.get(), backend = std::move(backend), req, budget] {
        const auto t0 = Clock::now();
        BackendReply reply;
        std::optional<std::string> error;
        try {
            reply = backend->call(req, budget);
        } catch (const std::exception& e) {
            error = e.what();
        }
        const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - t0);
        std::lock_guard lock(c->mu);
        c->reply = std::move(reply);
        c->error = std::move(error);
        c->latency_ms = elapsed.count();
        c->done = true;
        c->cv.notify_all();
    });
    return call;
}

void ModelGateway::retire(std::shared_ptr<Call> call) {
    bool done;
    {
        std::lock_guard lock(call->mu);
        done = call->done;
    }
    if (done) {
        call->worker.join();
        return;
    }
    std::lock_guard lock(mu_);
    in_flight_.push_back(std::move(call));
}

void ModelGateway::reap() {
    std::vector<std::shared_ptr<Call>> finished;
    {
        std::lock_guard lock(mu_);
        auto it = std::stable_partition(in_flight_.begin(), in_flight_.end(), [](const auto& c) {
            std::lock_guard l(c->mu);
            return !c->done;
        });
        finished.assign(std::make_move_iterator(it), std::make_move_iterator(in_flight_.end()));
        in_flight_.erase(it, in_flight_.end());
    }
    for (auto& c : finished) c->worker.join();
}

std::size_t ModelGateway::stragglers() {
    reap();
    std::lock_guard lock(mu_);
    return in_flight_.size();
}

namespace {

void check_request(const GenerationRequest& req) {
    if (req.context.empty() || req.answer.empty()) {
        throw Error(ErrorCode::PreconditionViolation, "generation request needs context and answer");
    }
    if (req.max_new_tokens <= 0) throw Error(ErrorCode::PreconditionViolation, "max_new_tokens must be > 0");
}

}  // namespace

GenerationResult ModelGateway::generate(const ModelDescriptor& backend, const GenerationRequest& req,
                                        std::chrono::milliseconds deadline) {
    auto results = fan_out(std::span<const ModelDescriptor>(&backend, 1), req, deadline);
    return std::move(results.front());
}

std::vector<GenerationResult> ModelGateway::fan_out(std::span<const ModelDescriptor> backends,
                                                    const GenerationRequest& req,
                                                    std::optional<std::chrono::milliseconds> deadline) {
    if (backends.empty()) throw Error(ErrorCode::PreconditionViolation, "fan_out needs at least one backend");
    check_request(req);
    const auto budget = deadline.value_or(config_.deadline);
    if (budget.count() <= 0) throw Error(ErrorCode::PreconditionViolation, "deadline must be > 0");
    reap();

    std::vector<GenerationResult> results(backends.size());
    std::vector<std::shared_ptr<Call>> calls(backends.size());
    const auto start = Clock::now();
    const auto limit = start + budget;
    for (std::size_t i = 0; i < backends.size(); ++i) {
        results[i].model_id = backends[i].model_id;
        try {
            calls[i] = launch(registry_->resolve(backends[i]), req, budget);
        } catch (const std::exception& e) {
            results[i].outcome = Outcome::Failure;
            results[i].message = e.what();
        }
    }
    for (std::size_t i = 0; i < calls.size(); ++i) {
        auto& call = calls[i];
        if (!call) continue;
        std::unique_lock lock(call->mu);
        if (call->cv.wait_until(lock, limit, [&] { return call->done; })) {
            if (call->error) {
                results[i].outcome = Outcome::Failure;
                results[i].message = *call->error;
                results[i].latency_ms = call->latency_ms;
            } else {
                results[i] = interpret_reply(backends[i].model_id, call->reply, call->latency_ms);
            }
        } else {
            results[i].outcome = Outcome::Timeout;
            results[i].latency_ms =
                std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - start).count();
        }
    }
    for (auto& call : calls) {
        if (call) retire(std::move(call));
    }
    return results;
}

}  // namespace quizgen
