#include <httplib.h>

#include "quizgen/error.hpp"
#include "quizgen/gateway.hpp"

namespace quizgen {

HttpBackend::HttpBackend(std::string endpoint, std::chrono::milliseconds io_slack) : io_slack_(io_slack) {
    constexpr std::string_view kScheme = "http://";
    if (endpoint.rfind(kScheme, 0) != 0) throw Error(ErrorCode::ConfigError, "not an http endpoint: " + endpoint);
    const auto slash = endpoint.find('/', kScheme.size());
    origin_ = endpoint.substr(0, slash);
    path_ = slash == std::string::npos ? std::string{} : endpoint.substr(slash);
    while (!path_.empty() && path_.back() == '/') path_.pop_back();
    path_ += "/generate";
}

BackendReply HttpBackend::call(const GenerationRequest& req, std::chrono::milliseconds budget) {
    httplib::Client client(origin_);
    const auto limit = budget + io_slack_;
    client.set_connection_timeout(limit);
    client.set_read_timeout(limit);
    client.set_write_timeout(limit);
    auto res = client.Post(path_, encode_request(req), "application/json");
    if (!res) return {0, "transport error: " + httplib::to_string(res.error())};
    return {res->status, res->body};
}

}  // namespace quizgen
