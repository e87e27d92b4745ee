#pragma once

#include <json.hpp>

#include "dpcl/interpreter.hpp"

namespace dpcl {

using Json = nlohmann::json;

/// Version written to every persisted document as `dpcl_schema`.
inline constexpr int kSchemaVersion = 1;

// Readers throw Error(corrupt_payload) on malformed input and
// Error(version_mismatch) on an unknown schema version.

Json value_to_json(const Value& v);
Value value_from_json(const Json& j);

/// Canonical snapshot. Positions also carry a rendered `view` block for
/// display; it is recomputed on every write and ignored on read.
Json state_to_json(const InstitutionalState& s, const Interpreter* interp = nullptr);
InstitutionalState state_from_json(const Json& j);

/// One position as it appears in a snapshot; `view` needs both pointers.
Json position_to_json(const PositionInstance& p, const InstitutionalState* s = nullptr,
                      const Interpreter* interp = nullptr);

Json delta_to_json(const StateDelta& d, const InstitutionalState* after = nullptr);
StateDelta delta_from_json(const Json& j);

/// Scenario step in the scenario-file form:
/// `{"do": {...}}`, `{"advance": "1m"}`, `{"assert": {...}}`, `{"produce": "+raining"}`.
Json step_to_json(const Step& step);
Step step_from_json(const Json& j);

Json scenario_to_json(const Scenario& sc);
Scenario scenario_from_json(const Json& j);

Json trace_to_json(const Trace& t, const Interpreter* interp = nullptr);
Trace trace_from_json(const Json& j);

Json error_to_json(ErrorCode code, const std::string& message);

/// Parses text, mapping syntax errors to Error(corrupt_payload).
Json parse_json(const std::string& text);
/// Stable text form: sorted keys, two-space indent, trailing newline.
std::string dump(const Json& j);

}  // namespace dpcl
