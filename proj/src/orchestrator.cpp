#include "quizgen/orchestrator.hpp"

#include <algorithm>
#include <cstdio>
#include <unordered_map>

#include "quizgen/error.hpp"
#include "quizgen/text.hpp"

namespace quizgen {

ReadingMaterial load_material(const Topic& topic, std::string_view raw_text, std::size_t limit_words) {
    if (limit_words == 0) throw Error(ErrorCode::PreconditionViolation, "limit_words must be > 0");
    if (text::is_blank(raw_text)) throw Error(ErrorCode::EmptyMaterial, "material for " + topic.id + " is blank");
    ReadingMaterial m;
    m.topic_id = topic.id;
    m.text = text::first_words(raw_text, limit_words);
    m.word_count = text::count_words(m.text);
    return m;
}

std::string dedup_key(std::string_view question) { return text::normalize_whitespace(question); }

std::vector<CandidateQuestion> dedup_candidates(std::span<const RawCandidate> raw) {
    std::vector<CandidateQuestion> out;
    std::unordered_map<std::string, std::size_t> index_of;
    for (const auto& r : raw) {
        auto key = dedup_key(r.question_text);
        auto [it, inserted] = index_of.try_emplace(std::move(key), out.size());
        if (inserted) {
            CandidateQuestion c;
            c.text = r.question_text;
            out.push_back(std::move(c));
        }
        auto& c = out[it->second];
        c.model_ids.insert(r.model_id);
        c.latency_ms.try_emplace(r.model_id, r.latency_ms);
    }
    return out;
}

std::uint64_t derive_shuffle_seed(std::string_view session_id, std::size_t char_start, std::size_t char_end,
                                  std::uint64_t salt) noexcept {
    std::uint64_t h = mix64(fnv1a(session_id) ^ mix64(salt + kGoldenGamma));
    h = mix64(h ^ (static_cast<std::uint64_t>(char_start) * kGoldenGamma));
    h = mix64(h ^ (static_cast<std::uint64_t>(char_end) + kGoldenGamma));
    return h;
}

std::vector<CandidateQuestion> shuffle_candidates(std::vector<CandidateQuestion> candidates, std::uint64_t seed) {
    SplitMix64 rng(seed);
    for (std::size_t i = candidates.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(rng.below(i));
        std::swap(candidates[i - 1], candidates[j]);
    }
    for (std::size_t i = 0; i < candidates.size(); ++i) candidates[i].presentation_index = i;
    return candidates;
}

// ---------------------------------------------------------------------------

void TopicCatalog::put(Topic topic, ReadingMaterial material) {
    std::unique_lock lock(mu_);
    auto id = topic.id;
    entries_.insert_or_assign(std::move(id), std::make_pair(std::move(topic), std::move(material)));
}

std::vector<Topic> TopicCatalog::topics() const {
    std::shared_lock lock(mu_);
    std::vector<Topic> out;
    for (const auto& [id, e] : entries_) out.push_back(e.first);
    return out;
}

std::optional<Topic> TopicCatalog::topic(const std::string& id) const {
    std::shared_lock lock(mu_);
    auto it = entries_.find(id);
    if (it == entries_.end()) return std::nullopt;
    return it->second.first;
}

std::optional<ReadingMaterial> TopicCatalog::material(const std::string& topic_id) const {
    std::shared_lock lock(mu_);
    auto it = entries_.find(topic_id);
    if (it == entries_.end()) return std::nullopt;
    return it->second.second;
}

Timestamp system_now() { return std::chrono::floor<std::chrono::seconds>(std::chrono::system_clock::now()); }

// ---------------------------------------------------------------------------

struct Orchestrator::Slot {
    mutable std::mutex mu;
    QuizSession session;
    std::optional<PresentationBatch> batch;
    std::vector<bool> judged;
    std::vector<PresentationBatch> history;
};

Orchestrator::Orchestrator(const TopicCatalog& catalog, ModelGateway& gateway, OrchestratorConfig config,
                           RecordSink* sink, WallClock clock)
    : catalog_(catalog), gateway_(gateway), config_(std::move(config)), sink_(sink), clock_(std::move(clock)) {
    if (config_.backends.empty()) throw Error(ErrorCode::ConfigError, "orchestrator needs at least one backend");
    check_unique_models(config_.backends);
}

std::shared_ptr<Orchestrator::Slot> Orchestrator::slot(const std::string& session_id) const {
    std::shared_lock lock(sessions_mu_);
    auto it = sessions_.find(session_id);
    if (it == sessions_.end()) throw Error(ErrorCode::UnknownSession, "unknown session " + session_id);
    return it->second;
}

namespace {

[[noreturn]] void invalid_state(const QuizSession& s, std::string_view op) {
    throw Error(ErrorCode::InvalidState,
                std::string(op) + " not allowed in state " + std::string(label(s.state)));
}

}  // namespace

QuizSession Orchestrator::create_session(const std::string& annotator_id, const std::string& topic_id) {
    if (annotator_id.empty()) throw Error(ErrorCode::PreconditionViolation, "annotator_id must be non-empty");
    if (!catalog_.topic(topic_id)) throw Error(ErrorCode::UnknownTopic, "unknown topic " + topic_id);
    auto s = std::make_shared<Slot>();
    std::unique_lock lock(sessions_mu_);
    char id[32];
    std::snprintf(id, sizeof id, "session-%06llu", static_cast<unsigned long long>(next_session_++));
    s->session.session_id = id;
    s->session.annotator_id = annotator_id;
    s->session.topic_id = topic_id;
    s->session.state = SessionState::Created;
    sessions_.emplace(s->session.session_id, s);
    return s->session;
}

ReadingMaterial Orchestrator::load_material(const std::string& session_id) {
    auto s = slot(session_id);
    std::lock_guard lock(s->mu);
    if (s->session.state != SessionState::Created) invalid_state(s->session, "load_material");
    auto material = catalog_.material(s->session.topic_id);
    if (!material) throw Error(ErrorCode::UnknownTopic, "no material for topic " + s->session.topic_id);
    s->session.state = SessionState::MaterialLoaded;
    return *material;
}

PresentationBatch Orchestrator::present_candidates(const std::string& session_id, std::int64_t char_start,
                                                   std::int64_t char_end) {
    auto s = slot(session_id);
    std::lock_guard lock(s->mu);
    auto& session = s->session;
    if (session.state != SessionState::MaterialLoaded && session.state != SessionState::ConceptPending) {
        invalid_state(session, "present_candidates");
    }
    auto material = catalog_.material(session.topic_id);
    if (!material) throw Error(ErrorCode::UnknownTopic, "no material for topic " + session.topic_id);
    auto validated = validate_concept(*material, char_start, char_end);

    GenerationRequest req;
    req.context = material->text;
    req.answer = validated.selection.answer_text;
    req.request_id = session.session_id + "/" + std::to_string(s->history.size() + 1);
    auto results = gateway_.fan_out(config_.backends, req, config_.deadline);

    PresentationBatch batch;
    batch.selection = std::move(validated.selection);
    batch.warnings = std::move(validated.warnings);
    std::vector<RawCandidate> raw;
    for (auto& r : results) {
        if (r.ok()) {
            raw.push_back({r.model_id, std::move(r.question), r.latency_ms});
        } else {
            batch.excluded_backends.push_back({r.model_id, r.outcome, std::move(r.message)});
        }
    }
    if (raw.empty()) throw Error(ErrorCode::AllBackendsFailed, "no backend produced a question in time");

    batch.shuffle_seed =
        derive_shuffle_seed(session.session_id, batch.selection.char_start, batch.selection.char_end, config_.seed);
    batch.candidates = shuffle_candidates(dedup_candidates(raw), batch.shuffle_seed);
    if (sink_) sink_->audit(session.session_id, batch);

    s->batch = batch;
    s->judged.assign(batch.candidates.size(), false);
    s->history.push_back(batch);
    session.state = SessionState::CandidatesPresented;
    return batch;
}

AnnotationRecord Orchestrator::record_judgment(const std::string& session_id, std::size_t presentation_index,
                                               const Judgment& judgment) {
    auto s = slot(session_id);
    std::lock_guard lock(s->mu);
    auto& session = s->session;
    if (session.state != SessionState::CandidatesPresented || !s->batch) invalid_state(session, "record_judgment");
    const auto& batch = *s->batch;
    if (presentation_index >= batch.candidates.size()) {
        throw Error(ErrorCode::UnknownCandidate, "no candidate at index " + std::to_string(presentation_index));
    }
    if (s->judged[presentation_index]) {
        throw Error(ErrorCode::AlreadyJudged, "candidate " + std::to_string(presentation_index) + " already judged");
    }
    const auto& candidate = batch.candidates[presentation_index];

    AnnotationRecord record;
    record.annotator_id = session.annotator_id;
    record.topic_id = session.topic_id;
    record.selection = batch.selection;
    record.question_text = candidate.text;
    record.model_ids = candidate.model_ids;
    record.judgment = judgment;
    record.timestamp = clock_();
    if (sink_) sink_->append(record, session.session_id, batch.shuffle_seed);

    s->judged[presentation_index] = true;
    session.judged_records.push_back(record);
    if (judgment.accepted()) session.accepted_questions.push_back({batch.selection, candidate.text});
    if (std::find(s->judged.begin(), s->judged.end(), false) == s->judged.end()) {
        s->batch.reset();
        s->judged.clear();
        session.state = SessionState::ConceptPending;
    }
    return record;
}

QuizSummary Orchestrator::finalize_quiz(const std::string& session_id) {
    auto s = slot(session_id);
    std::lock_guard lock(s->mu);
    auto& session = s->session;
    if (session.state != SessionState::ConceptPending) invalid_state(session, "finalize_quiz");
    session.state = SessionState::Finalized;

    QuizSummary summary;
    summary.session_id = session.session_id;
    summary.annotator_id = session.annotator_id;
    summary.topic_id = session.topic_id;
    summary.concept_count = s->history.size();
    summary.questions = session.accepted_questions;
    const auto n = summary.questions.size();
    if (n < kQuizMinQuestions) {
        summary.warnings.push_back({"quiz_too_short", "quiz has " + std::to_string(n) +
                                                          " questions, below recommended 8"});
    } else if (n > kQuizMaxQuestions) {
        summary.warnings.push_back({"quiz_too_long", "quiz has " + std::to_string(n) +
                                                         " questions, above recommended 12"});
    }
    const auto c = summary.concept_count;
    if (c < kQuizMinQuestions) {
        summary.warnings.push_back({"few_concepts", std::to_string(c) + " concepts selected, below recommended 8"});
    } else if (c > kQuizMaxQuestions) {
        summary.warnings.push_back({"many_concepts", std::to_string(c) + " concepts selected, above recommended 12"});
    }
    return summary;
}

QuizSession Orchestrator::session(const std::string& session_id) const {
    auto s = slot(session_id);
    std::lock_guard lock(s->mu);
    return s->session;
}

std::optional<PresentationBatch> Orchestrator::current_batch(const std::string& session_id) const {
    auto s = slot(session_id);
    std::lock_guard lock(s->mu);
    return s->batch;
}

std::vector<PresentationBatch> Orchestrator::batch_history(const std::string& session_id) const {
    auto s = slot(session_id);
    std::lock_guard lock(s->mu);
    return s->history;
}

}  // namespace quizgen
