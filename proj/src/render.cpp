#include "dpcl/render.hpp"

#include <sstream>

namespace dpcl {

namespace {

std::string descriptors_of(const ObjectInstance& o) {
  std::string out;
  for (const auto& [d, p] : o.descriptors) {
    if (!out.empty()) out += ", ";
    out += d;
    if (p.derived) out += "*";
  }
  return out;
}

std::string object_line(const InstitutionalState& s, const ObjectInstance& o) {
  std::string out = "#" + std::to_string(o.id) + " " + o.name;
  if (!o.descriptors.empty()) out += " [" + descriptors_of(o) + "]";
  if (!o.properties.empty()) {
    out += " {";
    bool first = true;
    for (const auto& [k, v] : o.properties) {
      out += first ? " " : ", ";
      first = false;
      out += k + ": " + render_value(s, v);
    }
    out += " }";
  }
  return out;
}

std::string duty_name(const PositionInstance& p) {
  return p.frame.label ? *p.frame.label : "duty#" + std::to_string(p.id);
}

}  // namespace

std::string render_ticks(Ticks t) {
  if (t == 0) return "0s";
  std::string out = t < 0 ? "-" : "";
  // Magnitude via unsigned arithmetic so INT64_MIN stays representable.
  std::uint64_t rest = t < 0 ? 0 - static_cast<std::uint64_t>(t) : static_cast<std::uint64_t>(t);
  const std::pair<std::uint64_t, const char*> units[] = {{86400, "d"}, {3600, "h"}, {60, "min"}, {1, "s"}};
  bool first = true;
  for (const auto& [size, suffix] : units) {
    if (rest < size) continue;
    if (!first) out += " ";
    first = false;
    out += std::to_string(rest / size) + suffix;
    rest %= size;
  }
  return out;
}

std::string render_position(const Interpreter& interp, const InstitutionalState& s,
                            const PositionInstance& p) {
  PositionView v = interp.view(s, p);
  std::string out = "#" + std::to_string(p.id) + " " + std::string(to_string(p.frame.kind));
  if (p.frame.label) out += " " + *p.frame.label;
  if (!v.holder.empty()) out += " " + v.holder;
  if (!v.action.empty()) out += " " + v.action;
  if (!v.counterparty.empty()) out += " to " + v.counterparty;
  if (p.violated) out += " VIOLATED";
  if (p.origin.kind == Origin::Kind::compound_member) {
    auto it = s.compounds.find(p.origin.compound);
    if (it != s.compounds.end()) out += " (in " + interp.render(s, it->second) + ")";
  } else if (p.origin.kind == Origin::Kind::derived) {
    out += " (derived)";
  }
  return out;
}

std::string render_state(const Interpreter& interp, const InstitutionalState& s) {
  std::ostringstream out;
  out << "clock " << s.clock << " (" << render_ticks(s.clock) << ")\n";
  if (s.objects.empty() && s.positions.empty()) {
    out << "no objects, no positions\n";
    return out.str();
  }
  out << "objects:" << (s.objects.empty() ? " none" : "") << "\n";
  for (const auto& [id, o] : s.objects) out << "  " << object_line(s, o) << "\n";
  if (!s.compounds.empty()) {
    out << "compounds:\n";
    for (const auto& [id, c] : s.compounds)
      out << "  #" << id << " " << interp.render(s, c) << "\n";
  }
  out << "positions:" << (s.positions.empty() ? " none" : "") << "\n";
  for (const auto& [id, p] : s.positions) out << "  " << render_position(interp, s, p) << "\n";
  std::vector<std::string> violated;
  for (const auto& [id, p] : s.positions)
    if (p.violated) violated.push_back(duty_name(p));
  out << "violations:";
  if (violated.empty()) out << " none";
  for (const auto& v : violated) out << " " << v;
  out << "\n";
  return out.str();
}

std::string render_delta(const Interpreter& interp, const InstitutionalState& s,
                         const StateDelta& d) {
  std::ostringstream out;
  if (d.clock_after != d.clock_before)
    out << "clock " << d.clock_before << " -> " << d.clock_after << "\n";
  for (const auto& ev : d.events) {
    if (ev.kind != EventOccurrence::Kind::act) continue;
    out << "event " << render_event(s, ev);
    if (ev.actor) out << " by " << render_value(s, ObjectRef{*ev.actor});
    if (ev.disabled) out << " (disabled: no power enables it)";
    out << "\n";
  }
  for (const auto& o : d.objects_created) out << "+ object " << object_line(s, o) << "\n";
  for (InstanceId id : d.objects_removed) out << "- object #" << id << "\n";
  for (const auto& c : d.descriptor_changes) {
    std::string who = render_value(s, ObjectRef{c.object});
    out << (c.added ? "+ " : "- ") << who << " in " << c.descriptor << "\n";
  }
  for (const auto& c : d.compounds_created) out << "+ compound #" << c.id << " " << interp.render(s, c) << "\n";
  for (InstanceId id : d.compounds_removed) out << "- compound #" << id << "\n";
  for (const auto& p : d.positions_created) {
    auto it = s.positions.find(p.id);
    out << "+ " << render_position(interp, s, it != s.positions.end() ? it->second : p) << "\n";
  }
  for (InstanceId id : d.positions_removed) out << "- position #" << id << "\n";
  for (InstanceId id : d.violations_raised) {
    auto it = s.positions.find(id);
    out << (it != s.positions.end() ? duty_name(it->second) : "#" + std::to_string(id))
        << " violated\n";
  }
  std::string text = out.str();
  return text.empty() ? "no changes\n" : text;
}

}  // namespace dpcl
