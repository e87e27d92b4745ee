#include "dpcl/state.hpp"

namespace dpcl {

PositionCategory category_of(FrameKind kind) {
  switch (kind) {
    case FrameKind::power: return PositionCategory::power;
    case FrameKind::duty: return PositionCategory::duty;
    default: return PositionCategory::other;
  }
}

std::string_view to_string(PositionCategory c) {
  switch (c) {
    case PositionCategory::power: return "power";
    case PositionCategory::duty: return "duty";
    case PositionCategory::other: return "other";
  }
  return "?";
}

const ObjectInstance* InstitutionalState::find_object(const std::string& name) const {
  for (const auto& [id, o] : objects)
    if (o.name == name) return &o;
  return nullptr;
}

namespace {

std::string position_name(const InstitutionalState& s, InstanceId id) {
  auto it = s.positions.find(id);
  if (it == s.positions.end()) return "#" + std::to_string(id);
  const PositionInstance& p = it->second;
  if (p.frame.label) return *p.frame.label;
  return std::string(to_string(p.frame.kind)) + "#" + std::to_string(id);
}

}  // namespace

std::string render_value(const InstitutionalState& s, const Value& v) {
  struct Visitor {
    const InstitutionalState& s;
    std::string operator()(std::monostate) const { return "none"; }
    std::string operator()(bool b) const { return b ? "true" : "false"; }
    std::string operator()(std::int64_t i) const { return std::to_string(i); }
    std::string operator()(const Symbol& x) const { return x.name; }
    std::string operator()(const ObjectRef& r) const {
      auto it = s.objects.find(r.id);
      return it == s.objects.end() ? "#" + std::to_string(r.id) : it->second.name;
    }
    std::string operator()(const PositionRef& r) const { return position_name(s, r.id); }
    std::string operator()(const CompoundRef& r) const {
      auto it = s.compounds.find(r.id);
      if (it == s.compounds.end()) return "#" + std::to_string(r.id);
      return it->second.decl + "#" + std::to_string(r.id);
    }
  };
  return std::visit(Visitor{s}, v);
}

std::string render_event(const InstitutionalState& s, const EventOccurrence& ev) {
  if (ev.kind == EventOccurrence::Kind::act) {
    std::string out = "#" + ev.name;
    if (!ev.refinements.empty()) {
      out += " { ";
      bool first = true;
      for (const auto& [k, v] : ev.refinements) {
        if (!first) out += ", ";
        first = false;
        out += k + ": " + render_value(s, v);
      }
      out += " }";
    }
    return out;
  }
  std::string out = ev.kind == EventOccurrence::Kind::create ? "+" : "-";
  if (!ev.flag.empty()) return out + ev.name + "." + ev.flag;
  out += ev.name;
  if (ev.target) out += "#" + std::to_string(*ev.target);
  return out;
}

}  // namespace dpcl
