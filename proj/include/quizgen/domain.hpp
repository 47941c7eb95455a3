#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace quizgen {

using ModelId = std::string;
using ModelIdSet = std::set<ModelId>;
using Timestamp = std::chrono::sys_seconds;

struct Topic {
    std::string id;
    std::string title;
    std::string source_uri;

    bool operator==(const Topic&) const = default;
};

struct ReadingMaterial {
    std::string topic_id;
    std::string text;
    std::size_t word_count = 0;

    bool operator==(const ReadingMaterial&) const = default;
};

/// A span of reading material chosen as a quiz concept. Offsets count
/// Unicode code points and are half-open: [char_start, char_end).
struct ConceptSelection {
    std::string material_ref;
    std::size_t char_start = 0;
    std::size_t char_end = 0;
    std::string answer_text;
    std::size_t word_count = 0;

    bool operator==(const ConceptSelection&) const = default;
};

struct CandidateQuestion {
    std::string text;
    ModelIdSet model_ids;
    std::map<ModelId, std::int64_t> latency_ms;
    std::size_t presentation_index = 0;

    bool operator==(const CandidateQuestion&) const = default;
};

// ---------------------------------------------------------------------------
// Rejection taxonomy
// ---------------------------------------------------------------------------

enum class ErrorCategory { Disfluent, OffTarget, WrongContext };

enum class ErrorSubtype {
    WrongTense,
    AwkwardPhrasing,
    NotAQuestion,
    Repetition,
    Unanswerable,
    OtherAnswerSpan,
    TooSpecific,
    RevealsAnswer,
    Inconsistent,
    NotSpecificEnough,
};

std::string_view label(ErrorCategory c) noexcept;
std::string_view label(ErrorSubtype s) noexcept;
std::string_view display_name(ErrorCategory c) noexcept;
std::string_view display_name(ErrorSubtype s) noexcept;
ErrorCategory parent_of(ErrorSubtype s) noexcept;

/// A taxonomy leaf. The category is derived from the subtype, so a value of
/// this type always names one of the ten valid (category, subtype) pairs.
class ErrorReason {
public:
    explicit constexpr ErrorReason(ErrorSubtype subtype) noexcept : subtype_(subtype) {}

    ErrorCategory category() const noexcept { return parent_of(subtype_); }
    ErrorSubtype subtype() const noexcept { return subtype_; }

    bool operator==(const ErrorReason&) const = default;

private:
    ErrorSubtype subtype_;
};

/// Exact match on canonical labels; throws UnknownReason otherwise.
ErrorReason validate_reason(std::string_view category, std::string_view subtype);

struct TaxonomyLeaf {
    ErrorSubtype subtype;
    std::string_view label;
    std::string_view display_name;
};

struct TaxonomyCategory {
    ErrorCategory category;
    std::string_view label;
    std::string_view display_name;
    std::vector<TaxonomyLeaf> leaves;
};

/// The fixed three-category, ten-leaf hierarchy in display order.
const std::vector<TaxonomyCategory>& taxonomy();

// ---------------------------------------------------------------------------
// Judgments and records
// ---------------------------------------------------------------------------

enum class Verdict { Accept, Reject };

std::string_view label(Verdict v) noexcept;

/// Accept carries no reason, Reject always carries one; no other state is
/// constructible.
class Judgment {
public:
    static Judgment accept() noexcept { return Judgment(Verdict::Accept, std::nullopt); }
    static Judgment reject(ErrorReason reason) noexcept { return Judgment(Verdict::Reject, reason); }

    Verdict verdict() const noexcept { return verdict_; }
    bool accepted() const noexcept { return verdict_ == Verdict::Accept; }
    const std::optional<ErrorReason>& reason() const noexcept { return reason_; }

    bool operator==(const Judgment&) const = default;

private:
    Judgment(Verdict v, std::optional<ErrorReason> r) noexcept : verdict_(v), reason_(r) {}

    Verdict verdict_;
    std::optional<ErrorReason> reason_;
};

struct AnnotationRecord {
    std::string annotator_id;
    std::string topic_id;
    ConceptSelection selection;
    std::string question_text;
    ModelIdSet model_ids;
    Judgment judgment = Judgment::accept();
    Timestamp timestamp{};

    bool operator==(const AnnotationRecord&) const = default;
};

/// Checks the invariants that can be verified without the source material.
/// Throws Error(InvalidRecord) naming the offending field.
void check_record(const AnnotationRecord& record);

// ---------------------------------------------------------------------------
// Sessions and configuration
// ---------------------------------------------------------------------------

enum class SessionState { Created, MaterialLoaded, ConceptPending, CandidatesPresented, Finalized };

std::string_view label(SessionState s) noexcept;

struct AcceptedQuestion {
    ConceptSelection selection;
    std::string question_text;

    bool operator==(const AcceptedQuestion&) const = default;
};

struct QuizSession {
    std::string session_id;
    std::string annotator_id;
    std::string topic_id;
    SessionState state = SessionState::Created;
    std::vector<AnnotationRecord> judged_records;
    std::vector<AcceptedQuestion> accepted_questions;
};

struct ModelDescriptor {
    ModelId model_id;
    std::string endpoint;
    std::string display_name;

    bool operator==(const ModelDescriptor&) const = default;
};

/// Throws ConfigError when two descriptors share a model_id.
void check_unique_models(std::span<const ModelDescriptor> models);

// ---------------------------------------------------------------------------
// Validation with advisory warnings
// ---------------------------------------------------------------------------

/// Non-fatal guidance surfaced to the user alongside a result.
struct Warning {
    std::string code;
    std::string message;

    bool operator==(const Warning&) const = default;
};

inline constexpr std::size_t kRecommendedConceptWords = 8;

struct ConceptValidation {
    ConceptSelection selection;
    std::vector<Warning> warnings;
};

/// Extracts [char_start, char_end) (code points) from the material. Long
/// selections are allowed but produce a "concept_too_long" warning.
ConceptValidation validate_concept(const ReadingMaterial& material, std::int64_t char_start,
                                   std::int64_t char_end);

std::string format_timestamp(Timestamp t);

/// Parses "YYYY-MM-DDTHH:MM:SSZ"; returns nullopt on any deviation.
std::optional<Timestamp> parse_timestamp(std::string_view s);

}  // namespace quizgen
