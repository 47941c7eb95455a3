#include "quizgen/domain.hpp"

#include <array>
#include <cstdio>
#include <ctime>
#include <set>

#include "quizgen/error.hpp"
#include "quizgen/text.hpp"

namespace quizgen {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::OffsetsOutOfRange: return "OffsetsOutOfRange";
        case ErrorCode::BlankSelection: return "BlankSelection";
        case ErrorCode::UnknownReason: return "UnknownReason";
        case ErrorCode::InvalidRecord: return "InvalidRecord";
        case ErrorCode::EmptyMaterial: return "EmptyMaterial";
        case ErrorCode::InvalidState: return "InvalidState";
        case ErrorCode::AlreadyJudged: return "AlreadyJudged";
        case ErrorCode::UnknownCandidate: return "UnknownCandidate";
        case ErrorCode::UnknownSession: return "UnknownSession";
        case ErrorCode::UnknownTopic: return "UnknownTopic";
        case ErrorCode::AllBackendsFailed: return "AllBackendsFailed";
        case ErrorCode::PreconditionViolation: return "PreconditionViolation";
        case ErrorCode::UnknownMetric: return "UnknownMetric";
        case ErrorCode::MissingEmbedder: return "MissingEmbedder";
        case ErrorCode::EmbeddingFailure: return "EmbeddingFailure";
        case ErrorCode::DegenerateInput: return "DegenerateInput";
        case ErrorCode::TooFewModels: return "TooFewModels";
        case ErrorCode::NoEligibleConcepts: return "NoEligibleConcepts";
        case ErrorCode::StorageFailure: return "StorageFailure";
        case ErrorCode::ParseError: return "ParseError";
        case ErrorCode::InvariantViolation: return "InvariantViolation";
        case ErrorCode::ConfigError: return "ConfigError";
    }
    return "Unknown";
}

namespace {

struct LeafInfo {
    ErrorSubtype subtype;
    ErrorCategory parent;
    std::string_view label;
    std::string_view display;
};

// Display order within each category follows the published examples table.
constexpr std::array<LeafInfo, 10> kLeaves{{
    {ErrorSubtype::WrongTense, ErrorCategory::Disfluent, "WrongTense", "Wrong Tense"},
    {ErrorSubtype::AwkwardPhrasing, ErrorCategory::Disfluent, "AwkwardPhrasing", "Awkward Phrasing"},
    {ErrorSubtype::NotAQuestion, ErrorCategory::Disfluent, "NotAQuestion", "Not a Question"},
    {ErrorSubtype::Repetition, ErrorCategory::Disfluent, "Repetition", "Repetition"},
    {ErrorSubtype::Unanswerable, ErrorCategory::OffTarget, "Unanswerable", "Unanswerable"},
    {ErrorSubtype::OtherAnswerSpan, ErrorCategory::OffTarget, "OtherAnswerSpan", "Other Answer Span"},
    {ErrorSubtype::TooSpecific, ErrorCategory::WrongContext, "TooSpecific", "Too Specific"},
    {ErrorSubtype::RevealsAnswer, ErrorCategory::WrongContext, "RevealsAnswer", "Reveals Answer"},
    {ErrorSubtype::Inconsistent, ErrorCategory::WrongContext, "Inconsistent", "Inconsistent"},
    {ErrorSubtype::NotSpecificEnough, ErrorCategory::WrongContext, "NotSpecificEnough",
     "Not Specific Enough"},
}};

constexpr std::array<ErrorCategory, 3> kCategories{
    ErrorCategory::Disfluent, ErrorCategory::OffTarget, ErrorCategory::WrongContext};

const LeafInfo& leaf_info(ErrorSubtype s) noexcept { return kLeaves[static_cast<std::size_t>(s)]; }

}  // namespace

std::string_view label(ErrorCategory c) noexcept {
    switch (c) {
        case ErrorCategory::Disfluent: return "Disfluent";
        case ErrorCategory::OffTarget: return "OffTarget";
        case ErrorCategory::WrongContext: return "WrongContext";
    }
    return {};
}

std::string_view display_name(ErrorCategory c) noexcept {
    switch (c) {
        case ErrorCategory::Disfluent: return "Disfluent";
        case ErrorCategory::OffTarget: return "Off Target";
        case ErrorCategory::WrongContext: return "Wrong Context";
    }
    return {};
}

std::string_view label(ErrorSubtype s) noexcept { return leaf_info(s).label; }
std::string_view display_name(ErrorSubtype s) noexcept { return leaf_info(s).display; }
ErrorCategory parent_of(ErrorSubtype s) noexcept { return leaf_info(s).parent; }

ErrorReason validate_reason(std::string_view category, std::string_view subtype) {
    for (const auto& leaf : kLeaves) {
        if (leaf.label == subtype && label(leaf.parent) == category) return ErrorReason(leaf.subtype);
    }
    throw Error(ErrorCode::UnknownReason,
                "unknown rejection reason " + std::string(category) + "/" + std::string(subtype));
}

const std::vector<TaxonomyCategory>& taxonomy() {
    static const std::vector<TaxonomyCategory> tree = [] {
        std::vector<TaxonomyCategory> out;
        for (auto c : kCategories) {
            TaxonomyCategory node{c, label(c), display_name(c), {}};
            for (const auto& leaf : kLeaves) {
                if (leaf.parent == c) node.leaves.push_back({leaf.subtype, leaf.label, leaf.display});
            }
            out.push_back(std::move(node));
        }
        return out;
    }();
    return tree;
}

std::string_view label(Verdict v) noexcept { return v == Verdict::Accept ? "Accept" : "Reject"; }

std::string_view label(SessionState s) noexcept {
    switch (s) {
        case SessionState::Created: return "Created";
        case SessionState::MaterialLoaded: return "MaterialLoaded";
        case SessionState::ConceptPending: return "ConceptPending";
        case SessionState::CandidatesPresented: return "CandidatesPresented";
        case SessionState::Finalized: return "Finalized";
    }
    return {};
}

void check_record(const AnnotationRecord& record) {
    auto fail = [](const char* field, const std::string& why) {
        throw Error(ErrorCode::InvalidRecord, std::string(field) + ": " + why, 0, field);
    };
    if (record.annotator_id.empty()) fail("annotator_id", "must be non-empty");
    if (record.topic_id.empty()) fail("topic_id", "must be non-empty");
    if (record.question_text.empty()) fail("question_text", "must be non-empty");
    if (record.model_ids.empty()) fail("model_ids", "must be non-empty");
    for (const auto& id : record.model_ids) {
        if (id.empty()) fail("model_ids", "model id must be non-empty");
    }
    const auto& c = record.selection;
    if (c.char_start >= c.char_end) fail("concept", "char_start must be < char_end");
    if (text::is_blank(c.answer_text)) fail("concept", "answer_text must be non-blank");
    if (text::codepoint_length(c.answer_text) != c.char_end - c.char_start) {
        fail("concept", "answer_text length disagrees with offsets");
    }
    if (c.word_count != text::count_words(c.answer_text)) fail("concept", "word_count mismatch");
}

void check_unique_models(std::span<const ModelDescriptor> models) {
    std::set<std::string_view> seen;
    for (const auto& m : models) {
        if (m.model_id.empty()) throw Error(ErrorCode::ConfigError, "model_id must be non-empty");
        if (!seen.insert(m.model_id).second) {
            throw Error(ErrorCode::ConfigError, "duplicate model_id " + m.model_id);
        }
    }
}

ConceptValidation validate_concept(const ReadingMaterial& material, std::int64_t char_start,
                                   std::int64_t char_end) {
    if (material.text.empty()) throw Error(ErrorCode::EmptyMaterial, "material is empty");
    const auto length = static_cast<std::int64_t>(text::codepoint_length(material.text));
    if (char_start < 0 || char_start >= char_end || char_end > length) {
        throw Error(ErrorCode::OffsetsOutOfRange,
                    "offsets [" + std::to_string(char_start) + ", " + std::to_string(char_end) +
                        ") invalid for material of length " + std::to_string(length));
    }
    const auto b = text::byte_offset(material.text, static_cast<std::size_t>(char_start));
    const auto e = text::byte_offset(material.text, static_cast<std::size_t>(char_end));
    std::string answer = material.text.substr(b, e - b);
    if (text::is_blank(answer)) throw Error(ErrorCode::BlankSelection, "selection is blank");

    ConceptValidation out;
    out.selection.material_ref = material.topic_id;
    out.selection.char_start = static_cast<std::size_t>(char_start);
    out.selection.char_end = static_cast<std::size_t>(char_end);
    out.selection.word_count = text::count_words(answer);
    out.selection.answer_text = std::move(answer);
    if (out.selection.word_count > kRecommendedConceptWords) {
        out.warnings.push_back({"concept_too_long", "concept longer than 8 words"});
    }
    return out;
}

std::string format_timestamp(Timestamp t) {
    const std::time_t tt = t.time_since_epoch().count();
    std::tm tm{};
    gmtime_r(&tt, &tm);
    char buf[64];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02dZ", tm.tm_year + 1900, tm.tm_mon + 1,
                  tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec);
    return buf;
}

std::optional<Timestamp> parse_timestamp(std::string_view s) {
    // YYYY-MM-DDTHH:MM:SSZ
    if (s.size() != 20 || s[4] != '-' || s[7] != '-' || s[10] != 'T' || s[13] != ':' ||
        s[16] != ':' || s[19] != 'Z') {
        return std::nullopt;
    }
    auto num = [&](std::size_t pos, std::size_t len) -> int {
        int v = 0;
        for (std::size_t i = pos; i < pos + len; ++i) {
            if (s[i] < '0' || s[i] > '9') return -1;
            v = v * 10 + (s[i] - '0');
        }
        return v;
    };
    const int year = num(0, 4), month = num(5, 2), day = num(8, 2);
    const int hour = num(11, 2), minute = num(14, 2), second = num(17, 2);
    if (year < 0 || month < 1 || day < 1 || hour < 0 || hour > 23 || minute < 0 || minute > 59 ||
        second < 0 || second > 59) {
        return std::nullopt;
    }
    using namespace std::chrono;
    const year_month_day ymd{std::chrono::year{year}, std::chrono::month{static_cast<unsigned>(month)},
                             std::chrono::day{static_cast<unsigned>(day)}};
    if (!ymd.ok()) return std::nullopt;
    return sys_days{ymd} + hours{hour} + minutes{minute} + seconds{second};
}

}  // namespace quizgen
