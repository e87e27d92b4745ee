#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "dpcl/ast.hpp"
#include "dpcl/duration.hpp"

namespace dpcl {

/// Engine-assigned identifier shared by objects, positions and compound
/// instances. Allocated sequentially from 1.
using InstanceId = std::uint64_t;
/// Event log sequence number, allocated sequentially from 1.
using Seq = std::uint64_t;

struct Symbol {
  std::string name;
  friend auto operator<=>(const Symbol&, const Symbol&) = default;
};
struct ObjectRef {
  InstanceId id = 0;
  friend auto operator<=>(const ObjectRef&, const ObjectRef&) = default;
};
struct PositionRef {
  InstanceId id = 0;
  friend auto operator<=>(const PositionRef&, const PositionRef&) = default;
};
struct CompoundRef {
  InstanceId id = 0;
  friend auto operator<=>(const CompoundRef&, const CompoundRef&) = default;
};

/// Ground runtime value. Integers carry ticks for time arithmetic.
using Value =
    std::variant<std::monostate, bool, std::int64_t, Symbol, ObjectRef, PositionRef, CompoundRef>;

using Bindings = std::map<std::string, Value>;

/// Where a fact came from. Only the members relevant to `kind` are set.
struct Origin {
  enum class Kind { static_decl, asserted, derived, produced, compound_member };

  Kind kind = Kind::asserted;
  std::string rule;          // derived: supporting rule id
  InstanceId scope = 0;      // derived: compound instance evaluating the rule, 0 at top level
  Seq event = 0;             // produced: production event that created the fact
  InstanceId compound = 0;   // compound_member: owning compound instance

  static Origin static_decl() { return {Kind::static_decl, {}, 0, 0, 0}; }
  static Origin asserted() { return {Kind::asserted, {}, 0, 0, 0}; }
  static Origin derived(std::string rule, InstanceId scope) {
    return {Kind::derived, std::move(rule), scope, 0, 0};
  }
  static Origin produced(Seq event) { return {Kind::produced, {}, 0, event, 0}; }
  static Origin member_of(InstanceId compound) { return {Kind::compound_member, {}, 0, 0, compound}; }

  bool is_derived_by(const std::string& r, InstanceId s) const {
    return kind == Kind::derived && rule == r && scope == s;
  }

  friend bool operator==(const Origin&, const Origin&) = default;
};

/// Provenance of one descriptor on an object: asserted, or derived from a rule.
struct DescriptorProvenance {
  bool derived = false;
  std::string rule;
  InstanceId scope = 0;

  friend bool operator==(const DescriptorProvenance&, const DescriptorProvenance&) = default;
};

struct ObjectInstance {
  InstanceId id = 0;
  std::string name;
  Bindings properties;
  std::map<std::string, DescriptorProvenance> descriptors;
  Origin origin;

  bool has_descriptor(const std::string& d) const { return descriptors.count(d) > 0; }

  friend bool operator==(const ObjectInstance&, const ObjectInstance&) = default;
};

enum class PositionCategory { power, duty, other };

PositionCategory category_of(FrameKind kind);
std::string_view to_string(PositionCategory c);

/// A live normative position. The frame keeps its source terms; `env` holds
/// the bindings its terms are evaluated against (compound parameters, labels,
/// the holder matched when the position was produced, ...).
struct PositionInstance {
  InstanceId id = 0;
  Frame frame;
  Bindings env;
  Origin origin;
  bool violated = false;

  PositionCategory category() const { return category_of(frame.kind); }

  friend bool operator==(const PositionInstance&, const PositionInstance&) = default;
};

struct CompoundInstance {
  InstanceId id = 0;
  std::string decl;
  Bindings params;
  std::map<std::string, InstanceId> labels;
  std::vector<InstanceId> members;
  Origin origin;

  friend bool operator==(const CompoundInstance&, const CompoundInstance&) = default;
};

struct Provenance {
  enum class Kind { external, reactive, consequence, violation };

  Kind kind = Kind::external;
  std::string rule;        // reactive
  InstanceId scope = 0;    // reactive
  InstanceId source = 0;   // consequence: power id; violation: duty id

  friend bool operator==(const Provenance&, const Provenance&) = default;
};

/// One entry of the event log: an act (`#borrow`), a production of an
/// instance (`+borrowing#5`, `-raining#3`) or a raised flag (`+d1.violation`).
struct EventOccurrence {
  enum class Kind { act, create, remove };

  Seq seq = 0;
  Ticks at = 0;
  std::optional<InstanceId> actor;
  Kind kind = Kind::act;
  std::string name;             // event name, or the produced target's name/label
  Bindings refinements;         // acts only
  std::optional<InstanceId> target;
  std::string flag;             // non-empty for flag productions
  Provenance provenance;
  bool disabled = false;        // act with no enabling power

  friend bool operator==(const EventOccurrence&, const EventOccurrence&) = default;
};

struct InstitutionalState {
  Ticks clock = 0;
  InstanceId next_id = 1;
  Seq next_seq = 1;
  std::map<InstanceId, ObjectInstance> objects;
  std::map<InstanceId, PositionInstance> positions;
  std::map<InstanceId, CompoundInstance> compounds;
  /// Labels of top-level frames.
  Bindings globals;
  std::vector<EventOccurrence> event_log;

  const ObjectInstance* find_object(const std::string& name) const;

  friend bool operator==(const InstitutionalState&, const InstitutionalState&) = default;
};

/// Human-readable value: symbols and integers verbatim, objects by name,
/// positions by label, compounds as `decl#id`. Falls back to `#id` for
/// instances no longer present.
std::string render_value(const InstitutionalState& state, const Value& v);

/// `+d1.violation`, `#register { instrument: c1 }`, `-raining#3`.
std::string render_event(const InstitutionalState& state, const EventOccurrence& ev);

}  // namespace dpcl
