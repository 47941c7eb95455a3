#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace quizgen {

using Vector = std::vector<double>;

/// Maps tokens to unit-norm vectors of a fixed dimension.
class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;

    virtual std::size_t dimension() const = 0;

    /// One vector per token, in order. Throws EmbeddingFailure on error.
    virtual std::vector<Vector> embed(std::span<const std::string> tokens) const = 0;

    /// False when concurrent embed() calls must be serialized by the caller;
    /// wrap such providers in SerializedEmbedder.
    virtual bool thread_safe() const { return true; }
};

/// Test fixture: every distinct token gets a fixed pseudo-random unit vector
/// derived from a hash of the token and the seed.
class HashEmbedder final : public EmbeddingProvider {
public:
    explicit HashEmbedder(std::size_t dimension = 64, std::uint64_t seed = 0);

    std::size_t dimension() const override { return dimension_; }
    std::vector<Vector> embed(std::span<const std::string> tokens) const override;

    Vector embed_one(const std::string& token) const;

private:
    std::size_t dimension_;
    std::uint64_t seed_;
};

/// Speaks POST {endpoint}/embed {"tokens":[...]} -> {"vectors":[[...]]}.
/// Responses are checked for count, dimension and unit norm.
class RemoteEmbedder final : public EmbeddingProvider {
public:
    RemoteEmbedder(std::string endpoint, std::size_t dimension,
                   std::chrono::milliseconds timeout = std::chrono::milliseconds(5000));

    std::size_t dimension() const override { return dimension_; }
    std::vector<Vector> embed(std::span<const std::string> tokens) const override;

private:
    std::string origin_;
    std::string path_;
    std::size_t dimension_;
    std::chrono::milliseconds timeout_;
};

/// Serializes access to a provider that is not safe for concurrent use.
class SerializedEmbedder final : public EmbeddingProvider {
public:
    explicit SerializedEmbedder(std::shared_ptr<const EmbeddingProvider> inner) : inner_(std::move(inner)) {}

    std::size_t dimension() const override { return inner_->dimension(); }
    std::vector<Vector> embed(std::span<const std::string> tokens) const override;

private:
    std::shared_ptr<const EmbeddingProvider> inner_;
    mutable std::mutex mu_;
};

/// Memoizes per-token vectors of a deterministic provider. Thread-safe when
/// the inner provider is.
class CachingEmbedder final : public EmbeddingProvider {
public:
    explicit CachingEmbedder(std::shared_ptr<const EmbeddingProvider> inner) : inner_(std::move(inner)) {}

    std::size_t dimension() const override { return inner_->dimension(); }
    std::vector<Vector> embed(std::span<const std::string> tokens) const override;
    bool thread_safe() const override { return inner_->thread_safe(); }

private:
    std::shared_ptr<const EmbeddingProvider> inner_;
    mutable std::mutex mu_;
    mutable std::unordered_map<std::string, Vector> cache_;
};

/// Validates a provider reply: `vectors` must hold `count` vectors of
/// `dimension` entries with norm within 1e-6 of 1. Throws EmbeddingFailure.
void check_embeddings(const std::vector<Vector>& vectors, std::size_t count, std::size_t dimension);

}  // namespace quizgen
