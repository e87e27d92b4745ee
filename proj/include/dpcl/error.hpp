#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace dpcl {

enum class ErrorCode {
  unknown_actor,
  unresolvable_path,
  type_error,
  cascade_limit,
  closure_divergence,
  arithmetic_overflow,
  missing_target,
  invalid_step,
  label_not_found,
  not_applicable,
  unknown_transform,
  unknown_program,
  unknown_session,
  version_mismatch,
  corrupt_payload,
  invalid_program,
  io,
};

std::string_view to_string(ErrorCode code);

/// Runtime failure raised by the engine, the rewriter and the session store.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace dpcl
