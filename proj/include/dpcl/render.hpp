#pragma once

#include <string>

#include "dpcl/interpreter.hpp"

namespace dpcl {

/// Multi-line listing of clock, objects, compounds, positions and violations.
/// An empty state prints `no objects, no positions`.
std::string render_state(const Interpreter& interp, const InstitutionalState& state);

/// One line per position: `#6 power library #request_return`.
std::string render_position(const Interpreter& interp, const InstitutionalState& state,
                            const PositionInstance& p);

/// Human-readable delta, one change per line; `no changes` when empty.
std::string render_delta(const Interpreter& interp, const InstitutionalState& after,
                         const StateDelta& delta);

/// `30d 1s`; zero prints `0s`.
std::string render_ticks(Ticks t);

}  // namespace dpcl
