#pragma once

#include <cstddef>
#include <initializer_list>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace quizgen {

class EmbeddingProvider;

/// Ordered tokens, none of them empty.
class TokenSequence {
public:
    TokenSequence() = default;
    /// Throws PreconditionViolation if any token is empty.
    explicit TokenSequence(std::vector<std::string> tokens);
    TokenSequence(std::initializer_list<std::string> tokens);

    const std::vector<std::string>& tokens() const noexcept { return tokens_; }
    std::size_t size() const noexcept { return tokens_.size(); }
    bool empty() const noexcept { return tokens_.empty(); }
    const std::string& operator[](std::size_t i) const { return tokens_[i]; }
    auto begin() const noexcept { return tokens_.begin(); }
    auto end() const noexcept { return tokens_.end(); }

    bool operator==(const TokenSequence&) const = default;

private:
    std::vector<std::string> tokens_;
};

/// Lowercases (Unicode), isolates every character that is neither a letter,
/// a digit nor whitespace, then splits on whitespace.
TokenSequence tokenize(std::string_view text);

enum class Metric { Bleu, Rouge1, RougeL, Meteor, EmbedF1 };

inline constexpr Metric kAllMetrics[] = {Metric::Bleu, Metric::Rouge1, Metric::RougeL, Metric::Meteor,
                                         Metric::EmbedF1};

std::string_view metric_name(Metric m) noexcept;

/// "bleu", "rouge1", "rougeL", "meteor", "embed_f1"; throws UnknownMetric.
Metric parse_metric(std::string_view name);

struct MetricScore {
    Metric metric;
    double value = 0.0;
};

// ---------------------------------------------------------------------------
// BLEU
// ---------------------------------------------------------------------------

inline constexpr int kBleuMaxOrder = 4;

/// Sentence BLEU with multi-reference clipping and closest-reference brevity
/// penalty. With `smooth`, orders n >= 2 with zero matches use
/// (0 + 1) / (total + 1). Empty candidate scores 0.
double bleu_sentence(const TokenSequence& candidate, std::span<const TokenSequence> references,
                     int max_n = kBleuMaxOrder, bool smooth = true);

struct BleuPair {
    TokenSequence candidate;
    std::vector<TokenSequence> references;
};

/// Corpus BLEU: counts and lengths pooled over all pairs, no smoothing.
/// Orders for which the pooled candidate has no n-grams at all are left out
/// of the geometric mean.
double bleu_corpus(std::span<const BleuPair> pairs, int max_n = kBleuMaxOrder);

// ---------------------------------------------------------------------------
// ROUGE
// ---------------------------------------------------------------------------

/// Max over references of the clipped n-gram F1.
double rouge_n(const TokenSequence& candidate, std::span<const TokenSequence> references, int n = 1);

std::size_t lcs_length(const TokenSequence& a, const TokenSequence& b);

/// Max over references of the LCS-based F1.
double rouge_l(const TokenSequence& candidate, std::span<const TokenSequence> references);

// ---------------------------------------------------------------------------
// METEOR (exact + stem stages, no synonyms)
// ---------------------------------------------------------------------------

struct MeteorParams {
    double alpha = 0.9;
    double beta = 3.0;
    double gamma = 0.5;
};

struct MeteorAlignment {
    /// For each candidate position, the aligned reference position.
    std::vector<std::optional<std::size_t>> candidate_to_reference;
    std::size_t matches = 0;
    std::size_t chunks = 0;
};

/// Maximal exact matching, then maximal stem matching over what is left,
/// each stage choosing among maximal matchings one with the fewest chunks.
MeteorAlignment meteor_align(const TokenSequence& candidate, const TokenSequence& reference);

double meteor(const TokenSequence& candidate, std::span<const TokenSequence> references,
              const MeteorParams& params = {});

// ---------------------------------------------------------------------------
// Embedding F1 (greedy cosine matching)
// ---------------------------------------------------------------------------

/// Greedy-matching F1 over token embeddings, cosine similarities clamped to
/// [0, 1], max over references. No idf weighting, no baseline rescaling.
double embed_f1(const TokenSequence& candidate, std::span<const TokenSequence> references,
                const EmbeddingProvider& embedder);

// ---------------------------------------------------------------------------
// Dispatch
// ---------------------------------------------------------------------------

/// Tokenizes then scores with the metric's sentence-level variant (smoothed
/// sentence BLEU). Throws MissingEmbedder for embed_f1 without an embedder.
MetricScore score(Metric metric, std::string_view candidate_text, std::span<const std::string> reference_texts,
                  const EmbeddingProvider* embedder = nullptr);

MetricScore score(std::string_view metric_name, std::string_view candidate_text,
                  std::span<const std::string> reference_texts, const EmbeddingProvider* embedder = nullptr);

/// Same as score() on pre-tokenized input.
double score_tokens(Metric metric, const TokenSequence& candidate, std::span<const TokenSequence> references,
                    const EmbeddingProvider* embedder = nullptr);

/// Human-readable description of the variant each metric implements.
std::string_view metric_variant(Metric m) noexcept;

}  // namespace quizgen
