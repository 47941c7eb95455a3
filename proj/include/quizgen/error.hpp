#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace quizgen {

enum class ErrorCode {
    // core-domain
    OffsetsOutOfRange,
    BlankSelection,
    UnknownReason,
    InvalidRecord,
    // session orchestration
    EmptyMaterial,
    InvalidState,
    AlreadyJudged,
    UnknownCandidate,
    UnknownSession,
    UnknownTopic,
    AllBackendsFailed,
    // gateway
    PreconditionViolation,
    // metrics
    UnknownMetric,
    MissingEmbedder,
    EmbeddingFailure,
    // analytics
    DegenerateInput,
    TooFewModels,
    NoEligibleConcepts,
    // persistence
    StorageFailure,
    ParseError,
    InvariantViolation,
    // cli
    ConfigError,
};

std::string_view to_string(ErrorCode code);

/// Every failure the library raises carries a machine-readable code. Import
/// errors additionally carry the offending 1-based line and, for invariant
/// violations, the field name.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    Error(ErrorCode code, const std::string& message, std::size_t line,
          std::optional<std::string> field = std::nullopt)
        : std::runtime_error(message), code_(code), line_(line), field_(std::move(field)) {}

    ErrorCode code() const noexcept { return code_; }
    std::optional<std::size_t> line() const noexcept { return line_; }
    const std::optional<std::string>& field() const noexcept { return field_; }

private:
    ErrorCode code_;
    std::optional<std::size_t> line_;
    std::optional<std::string> field_;
};

}  // namespace quizgen
