#pragma once

#include <json.hpp>

#include "quizgen/domain.hpp"

// Canonical JSON shapes of the core types. Keys are emitted in declaration
// order; the same shapes back the REST API and the record export.
namespace quizgen {

using Json = nlohmann::ordered_json;

Json to_json(const Topic& v);
Json to_json(const ReadingMaterial& v);
Json to_json(const ConceptSelection& v);
Json to_json(const CandidateQuestion& v);
Json to_json(const ErrorReason& v);
Json to_json(const Judgment& v);
Json to_json(const AnnotationRecord& v);
Json to_json(const AcceptedQuestion& v);
Json to_json(const QuizSession& v);
Json to_json(const ModelDescriptor& v);
Json to_json(const Warning& v);
Json to_json(const std::vector<Warning>& v);

// Parsers throw Error(InvalidRecord) with the offending field set.
Topic topic_from_json(const Json& j);
ReadingMaterial material_from_json(const Json& j);
ConceptSelection concept_from_json(const Json& j);
ErrorReason reason_from_json(const Json& j);
/// Parses {"verdict": ..., "reason": {...}?}; a Reject without a reason, or
/// an Accept with one, is rejected.
Judgment judgment_from_json(const Json& j);
AnnotationRecord record_from_json(const Json& j);
ModelDescriptor model_from_json(const Json& j);

Json taxonomy_json();

}  // namespace quizgen
