#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <vector>

#include "quizgen/domain.hpp"
#include "quizgen/gateway.hpp"
#include "quizgen/hash.hpp"

namespace quizgen {

inline constexpr std::size_t kMaterialWordLimit = 500;
inline constexpr std::size_t kQuizMinQuestions = 8;
inline constexpr std::size_t kQuizMaxQuestions = 12;

/// Truncates `raw_text` to its first `limit_words` words. Throws
/// EmptyMaterial for blank input, PreconditionViolation for limit 0.
ReadingMaterial load_material(const Topic& topic, std::string_view raw_text,
                              std::size_t limit_words = kMaterialWordLimit);

// ---------------------------------------------------------------------------
// Candidate preparation
// ---------------------------------------------------------------------------

struct RawCandidate {
    ModelId model_id;
    std::string question_text;
    std::int64_t latency_ms = 0;
};

/// Whitespace-normalized, case-sensitive text.
std::string dedup_key(std::string_view question);

/// Merges candidates with equal dedup keys. The first-received variant's text
/// is kept, provenance and latencies are unioned, and output order follows
/// first occurrence of each key.
std::vector<CandidateQuestion> dedup_candidates(std::span<const RawCandidate> raw);

/// Seed for one presentation batch, a function of the session id and the
/// concept offsets only (plus an optional deployment-wide salt).
std::uint64_t derive_shuffle_seed(std::string_view session_id, std::size_t char_start,
                                  std::size_t char_end, std::uint64_t salt = 0) noexcept;

/// Fisher-Yates over a SplitMix64 stream, so the permutation for a given seed
/// is the same on every platform. Assigns presentation_index 0..n-1.
std::vector<CandidateQuestion> shuffle_candidates(std::vector<CandidateQuestion> candidates,
                                                  std::uint64_t seed);

struct ExcludedBackend {
    ModelId model_id;
    Outcome kind = Outcome::Failure;
    std::string message;

    bool operator==(const ExcludedBackend&) const = default;
};

struct PresentationBatch {
    ConceptSelection selection;
    std::vector<CandidateQuestion> candidates;
    std::uint64_t shuffle_seed = 0;
    std::vector<ExcludedBackend> excluded_backends;
    std::vector<Warning> warnings;
};

// ---------------------------------------------------------------------------
// Topics and persistence hooks
// ---------------------------------------------------------------------------

/// Topics with their (already truncated) reading material. Thread-safe.
class TopicCatalog {
public:
    void put(Topic topic, ReadingMaterial material);

    std::vector<Topic> topics() const;
    std::optional<Topic> topic(const std::string& id) const;
    std::optional<ReadingMaterial> material(const std::string& topic_id) const;

private:
    mutable std::shared_mutex mu_;
    std::map<std::string, std::pair<Topic, ReadingMaterial>> entries_;
};

/// Where judged records go. `append` must be durable before it returns; if it
/// throws, the judgment is not applied to the session.
class RecordSink {
public:
    virtual ~RecordSink() = default;
    virtual void append(const AnnotationRecord& record, const std::string& session_id,
                        std::uint64_t shuffle_seed) = 0;
    virtual void audit(const std::string& /*session_id*/, const PresentationBatch& /*batch*/) {}
};

using WallClock = std::function<Timestamp()>;

Timestamp system_now();

// ---------------------------------------------------------------------------
// The quiz-design state machine
// ---------------------------------------------------------------------------

struct OrchestratorConfig {
    std::vector<ModelDescriptor> backends;
    std::optional<std::chrono::milliseconds> deadline;
    /// Mixed into every shuffle seed.
    std::uint64_t seed = 0;
};

struct QuizSummary {
    std::string session_id;
    std::string annotator_id;
    std::string topic_id;
    std::size_t concept_count = 0;
    std::vector<AcceptedQuestion> questions;
    std::vector<Warning> warnings;
};

/// Drives sessions through Created -> MaterialLoaded ->
/// (ConceptPending <-> CandidatesPresented)* -> Finalized. Calls on one
/// session are serialized; distinct sessions run concurrently. A call that
/// fails leaves its session unchanged.
class Orchestrator {
public:
    Orchestrator(const TopicCatalog& catalog, ModelGateway& gateway, OrchestratorConfig config,
                 RecordSink* sink = nullptr, WallClock clock = system_now);

    QuizSession create_session(const std::string& annotator_id, const std::string& topic_id);

    ReadingMaterial load_material(const std::string& session_id);

    PresentationBatch present_candidates(const std::string& session_id, std::int64_t char_start,
                                         std::int64_t char_end);

    AnnotationRecord record_judgment(const std::string& session_id, std::size_t presentation_index,
                                     const Judgment& judgment);

    QuizSummary finalize_quiz(const std::string& session_id);

    QuizSession session(const std::string& session_id) const;

    /// The batch currently awaiting judgments, if any.
    std::optional<PresentationBatch> current_batch(const std::string& session_id) const;

    /// Every batch presented in the session, oldest first.
    std::vector<PresentationBatch> batch_history(const std::string& session_id) const;

private:
    struct Slot;

    std::shared_ptr<Slot> slot(const std::string& session_id) const;

    const TopicCatalog& catalog_;
    ModelGateway& gateway_;
    OrchestratorConfig config_;
    RecordSink* sink_;
    WallClock clock_;

    mutable std::shared_mutex sessions_mu_;
    std::map<std::string, std::shared_ptr<Slot>> sessions_;
    std::uint64_t next_session_ = 1;
};

}  // namespace quizgen
