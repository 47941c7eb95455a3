#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "quizgen/domain.hpp"
#include "quizgen/metrics.hpp"

namespace quizgen {

/// Product-moment correlation. Throws DegenerateInput for mismatched or
/// short inputs and for zero variance in either vector.
double pearson(std::span<const double> x, std::span<const double> y);

inline double verdict_value(const Judgment& j) noexcept { return j.accepted() ? 1.0 : 0.0; }

// ---------------------------------------------------------------------------
// Acceptance and error distribution
// ---------------------------------------------------------------------------

struct AcceptanceStat {
    std::size_t accepted = 0;
    std::size_t total = 0;

    double rate() const noexcept { return total == 0 ? 0.0 : static_cast<double>(accepted) / total; }
    bool operator==(const AcceptanceStat&) const = default;
};

struct AcceptanceReport {
    std::map<ModelId, AcceptanceStat> per_model;
    /// Record-weighted, each record counted once.
    AcceptanceStat overall;
};

/// A record with k model_ids is one observation for each of the k models.
AcceptanceReport acceptance_rates(std::span<const AnnotationRecord> records);

/// Column names of the category breakdown, in display order.
inline constexpr const char* kOutcomeColumns[] = {"Accepted", "Disfluent", "OffTarget", "WrongContext"};

struct ErrorBreakdown {
    std::size_t total = 0;
    /// Keyed by kOutcomeColumns; sums to 1.
    std::map<std::string, double> categories;
    /// Keyed by subtype label, as a share of all judgments.
    std::map<std::string, double> subtypes;
};

std::map<ModelId, ErrorBreakdown> error_distribution(std::span<const AnnotationRecord> records);

// ---------------------------------------------------------------------------
// Inter-annotator agreement
// ---------------------------------------------------------------------------

struct ItemKey {
    std::string topic_id;
    std::string answer_text;
    std::string question_text;

    auto operator<=>(const ItemKey&) const = default;
};

struct SharedItem {
    ItemKey key;
    ModelIdSet model_ids;
    /// Verdicts of the pair's first and second annotator (Accept = 1).
    int first = 0;
    int second = 0;
};

struct AnnotatorPair {
    /// Ordered so that first < second.
    std::pair<std::string, std::string> annotators;
    std::vector<SharedItem> items;
};

/// Items keyed by (topic, answer text, question text). An annotator who
/// judged the same item more than once is represented by the first judgment.
std::vector<AnnotatorPair> find_co_annotations(std::span<const AnnotationRecord> records);

struct AgreementReport {
    std::optional<double> coefficient;
    /// Distinct items judged by at least two annotators.
    std::size_t co_annotated_count = 0;
    std::map<ModelId, double> per_model_coefficients;
};

/// Pooled Pearson over every paired observation. Each pair enters in both
/// orientations so the result does not depend on annotator naming. Models
/// whose pairs have no variance are left out of per_model_coefficients.
/// Throws DegenerateInput when the pooled vectors are degenerate.
AgreementReport iaa(std::span<const AnnotationRecord> records);

// ---------------------------------------------------------------------------
// Reference-based scoring
// ---------------------------------------------------------------------------

struct ConceptKey {
    std::string topic_id;
    std::string answer_text;

    auto operator<=>(const ConceptKey&) const = default;
};

/// Accepted question texts per concept, deduplicated under dedup_key, in
/// first-seen order.
std::map<ConceptKey, std::vector<std::string>> build_references(std::span<const AnnotationRecord> records);

struct InstanceCorrelation {
    double coefficient = 0.0;
    std::size_t scored = 0;
    /// Records whose concept has no accepted question other than their own.
    std::size_t excluded = 0;
};

/// Throws DegenerateInput; MissingEmbedder for embed_f1 without embedder.
InstanceCorrelation instance_correlation(std::span<const AnnotationRecord> records, Metric metric,
                                         const EmbeddingProvider* embedder = nullptr);

struct SystemCorrelation {
    double coefficient = 0.0;
    std::map<ModelId, double> acceptance;
    std::map<ModelId, double> metric_values;
};

/// Per-model metric values: corpus BLEU for bleu, the mean instance score
/// otherwise. Models without scorable records are left out. Throws
/// TooFewModels below three models, DegenerateInput.
std::map<ModelId, double> model_metric_values(std::span<const AnnotationRecord> records, Metric metric,
                                              const EmbeddingProvider* embedder = nullptr);

SystemCorrelation system_correlation(std::span<const AnnotationRecord> records, Metric metric,
                                     const EmbeddingProvider* embedder = nullptr);

inline constexpr std::size_t kMinSystemModels = 3;

/// Mean single-reference score over every ordered pair of accepted questions
/// of the same concept. Throws NoEligibleConcepts when no concept has two.
double upper_bound(std::span<const AnnotationRecord> records, Metric metric,
                   const EmbeddingProvider* embedder = nullptr);

// ---------------------------------------------------------------------------
// Combined report
// ---------------------------------------------------------------------------

struct ModelRow {
    double acceptance_rate = 0.0;
    std::size_t judged = 0;
    std::map<Metric, std::optional<double>> metric_values;
};

struct MetricReport {
    std::vector<Metric> metrics;
    std::map<ModelId, ModelRow> per_model;
    std::map<Metric, std::optional<double>> upper_bound;
    std::map<Metric, std::optional<double>> instance_corr;
    std::map<Metric, std::optional<double>> system_corr;
    /// Free-form notes: metric variants and why a value is missing.
    std::vector<std::pair<std::string, std::string>> metadata;
};

/// Every cell that cannot be computed is left empty with a metadata note.
MetricReport build_metric_report(std::span<const AnnotationRecord> records, std::span<const Metric> metrics,
                                 const EmbeddingProvider* embedder = nullptr);

}  // namespace quizgen
