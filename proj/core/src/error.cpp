#include "hanzi/error.hpp"

namespace hanzi {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::missing_image: return "MissingImage";
    case ErrorCode::duplicate_id: return "DuplicateId";
    case ErrorCode::malformed_record: return "MalformedRecord";
    case ErrorCode::out_of_range: return "OutOfRange";
    case ErrorCode::dev_too_large: return "DevTooLarge";
    case ErrorCode::missing_grades: return "MissingGrades";
    case ErrorCode::embedder_unavailable: return "EmbedderUnavailable";
    case ErrorCode::decode_failure: return "DecodeFailure";
    case ErrorCode::dimension_mismatch: return "DimensionMismatch";
    case ErrorCode::zero_vector: return "ZeroVector";
    case ErrorCode::empty_pool: return "EmptyPool";
    case ErrorCode::missing_embedding: return "MissingEmbedding";
    case ErrorCode::missing_label: return "MissingLabel";
    case ErrorCode::missing_predicted_grade: return "MissingPredictedGrade";
    case ErrorCode::incomplete_grade_map: return "IncompleteGradeMap";
    case ErrorCode::endpoint_unavailable: return "EndpointUnavailable";
    case ErrorCode::auth_failure: return "AuthFailure";
    case ErrorCode::oversize_payload: return "OversizePayload";
    case ErrorCode::malformed_response: return "MalformedResponse";
    case ErrorCode::unparsable_grade: return "UnparsableGrade";
    case ErrorCode::empty_feedback: return "EmptyFeedback";
    case ErrorCode::fixture_miss: return "FixtureMiss";
    case ErrorCode::empty_input: return "EmptyInput";
    case ErrorCode::empty_reference: return "EmptyReference";
    case ErrorCode::missing_prediction: return "MissingPrediction";
    case ErrorCode::id_mismatch: return "IdMismatch";
    case ErrorCode::config_error: return "ConfigError";
    case ErrorCode::io_error: return "IoError";
  }
  return "UnknownError";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

void raise(ErrorCode code, const std::string& message) { throw Error(code, message); }

}  // namespace hanzi
