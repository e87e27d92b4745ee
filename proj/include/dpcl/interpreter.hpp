#pragma once

#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "dpcl/ast.hpp"
#include "dpcl/error.hpp"
#include "dpcl/state.hpp"

namespace dpcl {

// ---- scenarios ----------------------------------------------------------------

/// `actor` performs `#event { refinements }`. The actor is an object name,
/// `name#id`, or `#id`. Refinement symbols of the form `name#id` denote
/// instances.
struct DoAction {
  std::string actor;
  std::string event;
  Bindings refinements;
  friend bool operator==(const DoAction&, const DoAction&) = default;
};

struct Advance {
  Duration duration;
  friend bool operator==(const Advance&, const Advance&) = default;
};

struct AssertObject {
  std::string name;
  std::vector<std::string> descriptors;
  Bindings properties;
  friend bool operator==(const AssertObject&, const AssertObject&) = default;
};

/// `+raining`, `+fine(alice, library)`, `-borrowing#7`.
struct Produce {
  Polarity polarity = Polarity::create;
  std::string target;
  friend bool operator==(const Produce&, const Produce&) = default;
};

using Step = std::variant<DoAction, Advance, AssertObject, Produce>;

struct Scenario {
  std::vector<Step> steps;
};

// ---- deltas and traces --------------------------------------------------------

struct DescriptorChange {
  InstanceId object = 0;
  std::string descriptor;
  bool added = true;
  DescriptorProvenance provenance;  // meaningful when added
  friend bool operator==(const DescriptorChange&, const DescriptorChange&) = default;
};

/// Difference between two states. Applying it to the pre-state reproduces the
/// post-state exactly.
struct StateDelta {
  Ticks clock_before = 0;
  Ticks clock_after = 0;
  InstanceId next_id = 1;
  Seq next_seq = 1;
  std::vector<ObjectInstance> objects_created;
  std::vector<ObjectInstance> objects_updated;  // changes other than descriptors
  std::vector<InstanceId> objects_removed;
  std::vector<PositionInstance> positions_created;
  std::vector<PositionInstance> positions_updated;  // changes other than the violation flag
  std::vector<InstanceId> positions_removed;
  std::vector<CompoundInstance> compounds_created;
  std::vector<CompoundInstance> compounds_updated;
  std::vector<InstanceId> compounds_removed;
  std::vector<DescriptorChange> descriptor_changes;
  std::vector<InstanceId> violations_raised;
  std::vector<EventOccurrence> events;
  /// The step was an act that no power enabled.
  bool disabled = false;

  /// True when the step changed nothing at all.
  bool empty() const;

  friend bool operator==(const StateDelta&, const StateDelta&) = default;
};

StateDelta diff(const InstitutionalState& before, const InstitutionalState& after);
void apply_delta(InstitutionalState& state, const StateDelta& delta);

struct StepOutcome {
  InstitutionalState state;
  StateDelta delta;
};

struct TraceEntry {
  Step step;
  StateDelta delta;
  Ticks clock = 0;
};

struct StepFailure {
  std::size_t step_index = 0;
  ErrorCode code = ErrorCode::invalid_step;
  std::string message;
};

struct Trace {
  InstitutionalState initial;
  std::vector<TraceEntry> entries;
  InstitutionalState final_state;
  std::optional<StepFailure> failure;

  /// Re-applies every recorded delta to the initial snapshot.
  InstitutionalState replay() const;
};

// ---- queries ------------------------------------------------------------------

struct PositionFilter {
  std::optional<PositionCategory> kind;
  std::optional<std::string> holder;  // actor reference; positions whose holder pattern it matches
  std::optional<std::string> action;  // action event name
  std::optional<bool> violated;
};

/// A power the actor could exercise, with reference-valued refinements
/// resolved against the actor. Pattern variables stay as written.
struct EnabledAction {
  InstanceId power = 0;
  std::string event;
  std::vector<std::pair<std::string, std::string>> refinements;

  /// `#register { instrument: c1 }`
  std::string text() const;
};

/// Frame fields rendered against the current state, for display.
struct PositionView {
  std::string holder;
  std::string counterparty;
  std::string action;
  std::string consequence;
  std::string violation;
};

struct Limits {
  std::size_t cascade_budget = 10'000;
  std::size_t closure_passes = 1'000;
};

// ---- interpreter ----------------------------------------------------------------

/// Executes scenarios against a validated program. Every operation takes a
/// state by const reference and returns a new one, so a failing step leaves
/// the caller's state untouched. Instances are cheap to copy and safe to share
/// between threads.
class Interpreter {
 public:
  explicit Interpreter(Program program, Limits limits = {});

  const Program& program() const;
  const Limits& limits() const { return limits_; }

  InstitutionalState init_state(Ticks at = 0) const;

  StepOutcome do_action(const InstitutionalState& state, const DoAction& action) const;
  StepOutcome advance_clock(const InstitutionalState& state, const Duration& duration) const;
  StepOutcome assert_object(const InstitutionalState& state, const AssertObject& object) const;
  StepOutcome produce(const InstitutionalState& state, const Produce& production) const;
  StepOutcome apply(const InstitutionalState& state, const Step& step) const;

  InstitutionalState recompute_closure(const InstitutionalState& state) const;

  Trace run(const Scenario& scenario, Ticks start = 0) const;

  std::vector<PositionInstance> query_positions(const InstitutionalState& state,
                                                const PositionFilter& filter) const;
  std::vector<EnabledAction> enabled_actions(const InstitutionalState& state,
                                             const std::string& actor) const;

  PositionView view(const InstitutionalState& state, const PositionInstance& position) const;
  /// `fine(alice, library)`: parameters in declaration order.
  std::string render(const InstitutionalState& state, const CompoundInstance& compound) const;

  /// Resolves an actor reference; throws Error(unknown_actor).
  InstanceId resolve_actor(const InstitutionalState& state, const std::string& actor) const;

  struct Compiled;

 private:
  std::shared_ptr<const Compiled> compiled_;
  Limits limits_;
};

std::string_view step_kind(const Step& step);
std::string describe_step(const Step& step);

}  // namespace dpcl
