#include "quizgen/embedding.hpp"

#include <cmath>
#include <numbers>

#include <httplib.h>
#include <json.hpp>

#include "quizgen/error.hpp"
#include "quizgen/hash.hpp"

namespace quizgen {

namespace {

std::uint64_t hash_token(const std::string& token, std::uint64_t seed) {
    return mix64(fnv1a(token, 0xcbf29ce484222325ULL ^ mix64(seed)));
}

}  // namespace

HashEmbedder::HashEmbedder(std::size_t dimension, std::uint64_t seed) : dimension_(dimension), seed_(seed) {
    if (dimension_ == 0) throw Error(ErrorCode::PreconditionViolation, "embedding dimension must be > 0");
}

Vector HashEmbedder::embed_one(const std::string& token) const {
    SplitMix64 rng(hash_token(token, seed_));
    Vector v(dimension_);
    double norm2 = 0.0;
    do {
        norm2 = 0.0;
        for (auto& x : v) {
            // Box-Muller: isotropic Gaussian directions are uniform on the sphere.
            x = std::sqrt(-2.0 * std::log(rng.unit())) * std::cos(2.0 * std::numbers::pi * rng.unit());
            norm2 += x * x;
        }
    } while (norm2 == 0.0);
    const double inv = 1.0 / std::sqrt(norm2);
    for (auto& x : v) x *= inv;
    return v;
}

std::vector<Vector> HashEmbedder::embed(std::span<const std::string> tokens) const {
    std::vector<Vector> out;
    out.reserve(tokens.size());
    for (const auto& t : tokens) out.push_back(embed_one(t));
    return out;
}

void check_embeddings(const std::vector<Vector>& vectors, std::size_t count, std::size_t dimension) {
    if (vectors.size() != count) {
        throw Error(ErrorCode::EmbeddingFailure, "expected " + std::to_string(count) + " vectors, got " +
                                                     std::to_string(vectors.size()));
    }
    for (const auto& v : vectors) {
        if (v.size() != dimension) throw Error(ErrorCode::EmbeddingFailure, "vector has wrong dimension");
        double norm2 = 0.0;
        for (double x : v) norm2 += x * x;
        if (!(std::abs(std::sqrt(norm2) - 1.0) <= 1e-6)) {
            throw Error(ErrorCode::EmbeddingFailure, "vector is not unit-norm");
        }
    }
}

RemoteEmbedder::RemoteEmbedder(std::string endpoint, std::size_t dimension, std::chrono::milliseconds timeout)
    : dimension_(dimension), timeout_(timeout) {
    constexpr std::string_view kScheme = "http://";
    if (endpoint.rfind(kScheme, 0) != 0) throw Error(ErrorCode::ConfigError, "not an http endpoint: " + endpoint);
    const auto slash = endpoint.find('/', kScheme.size());
    origin_ = endpoint.substr(0, slash);
    path_ = slash == std::string::npos ? std::string{} : endpoint.substr(slash);
    while (!path_.empty() && path_.back() == '/') path_.pop_back();
    path_ += "/embed";
}

std::vector<Vector> RemoteEmbedder::embed(std::span<const std::string> tokens) const {
    if (tokens.empty()) return {};
    nlohmann::json body{{"tokens", std::vector<std::string>(tokens.begin(), tokens.end())}};
    httplib::Client client(origin_);
    client.set_connection_timeout(timeout_);
    client.set_read_timeout(timeout_);
    auto res = client.Post(path_, body.dump(), "application/json");
    if (!res) throw Error(ErrorCode::EmbeddingFailure, "embedding request failed: " + httplib::to_string(res.error()));
    if (res->status != 200) {
        throw Error(ErrorCode::EmbeddingFailure, "embedding service returned " + std::to_string(res->status));
    }
    auto j = nlohmann::json::parse(res->body, nullptr, false);
    if (j.is_discarded() || !j.contains("vectors") || !j["vectors"].is_array()) {
        throw Error(ErrorCode::EmbeddingFailure, "malformed embedding response");
    }
    std::vector<Vector> out;
    try {
        out = j["vectors"].get<std::vector<Vector>>();
    } catch (const nlohmann::json::exception&) {
        throw Error(ErrorCode::EmbeddingFailure, "malformed embedding vectors");
    }
    check_embeddings(out, tokens.size(), dimension_);
    return out;
}

std::vector<Vector> SerializedEmbedder::embed(std::span<const std::string> tokens) const {
    std::lock_guard lock(mu_);
    return inner_->embed(tokens);
}

std::vector<Vector> CachingEmbedder::embed(std::span<const std::string> tokens) const {
    std::vector<std::string> missing;
    {
        std::lock_guard lock(mu_);
        for (const auto& t : tokens) {
            if (!cache_.count(t)) missing.push_back(t);
        }
    }
    if (!missing.empty()) {
        auto fresh = inner_->embed(missing);
        check_embeddings(fresh, missing.size(), inner_->dimension());
        std::lock_guard lock(mu_);
        for (std::size_t i = 0; i < missing.size(); ++i) cache_.try_emplace(missing[i], std::move(fresh[i]));
    }
    std::vector<Vector> out;
    out.reserve(tokens.size());
    std::lock_guard lock(mu_);
    for (const auto& t : tokens) out.push_back(cache_.at(t));
    return out;
}

}  // namespace quizgen
