#include "dpcl/error.hpp"

namespace dpcl {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::unknown_actor: return "unknown-actor";
    case ErrorCode::unresolvable_path: return "unresolvable-path";
    case ErrorCode::type_error: return "type-error";
    case ErrorCode::cascade_limit: return "cascade-limit";
    case ErrorCode::closure_divergence: return "closure-divergence";
    case ErrorCode::arithmetic_overflow: return "arithmetic-overflow";
    case ErrorCode::missing_target: return "missing-target";
    case ErrorCode::invalid_step: return "invalid-step";
    case ErrorCode::label_not_found: return "label-not-found";
    case ErrorCode::not_applicable: return "not-applicable";
    case ErrorCode::unknown_transform: return "unknown-transform";
    case ErrorCode::unknown_program: return "unknown-program";
    case ErrorCode::unknown_session: return "unknown-session";
    case ErrorCode::version_mismatch: return "version-mismatch";
    case ErrorCode::corrupt_payload: return "corrupt-payload";
    case ErrorCode::invalid_program: return "invalid-program";
    case ErrorCode::io: return "io";
  }
  return "unknown";
}

}  // namespace dpcl
