#pragma once

#include <stdexcept>
#include <string>

namespace hanzi {

enum class ErrorCode {
  // corpus
  missing_image,
  duplicate_id,
  malformed_record,
  out_of_range,
  dev_too_large,
  missing_grades,
  // embedding / index
  embedder_unavailable,
  decode_failure,
  dimension_mismatch,
  zero_vector,
  empty_pool,
  missing_embedding,
  // prompts / export
  missing_label,
  missing_predicted_grade,
  incomplete_grade_map,
  // gateway
  endpoint_unavailable,
  auth_failure,
  oversize_payload,
  malformed_response,
  unparsable_grade,
  empty_feedback,
  fixture_miss,
  // metrics
  empty_input,
  empty_reference,
  missing_prediction,
  id_mismatch,
  // config / io
  config_error,
  io_error,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void raise(ErrorCode code, const std::string& message);

}  // namespace hanzi
