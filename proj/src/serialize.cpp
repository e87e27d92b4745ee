#include "dpcl/serialize.hpp"

#include "dpcl/parser.hpp"
#include "dpcl/printer.hpp"

namespace dpcl {

namespace {

[[noreturn]] void corrupt(const std::string& what) {
  throw Error(ErrorCode::corrupt_payload, what);
}

const Json& req(const Json& j, const char* key) {
  if (!j.is_object()) corrupt(std::string("expected an object holding '") + key + "'");
  auto it = j.find(key);
  if (it == j.end()) corrupt(std::string("missing '") + key + "'");
  return *it;
}

template <class T>
T get(const Json& j, const char* key) {
  return req(j, key).get<T>();
}

template <class T>
T get_or(const Json& j, const char* key, T fallback) {
  auto it = j.find(key);
  return it == j.end() || it->is_null() ? fallback : it->get<T>();
}

/// Runs a reader, turning library exceptions into corrupt_payload.
template <class F>
auto guarded(F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    corrupt(e.what());
  }
}

void check_version(const Json& j) {
  int v = get<int>(j, "dpcl_schema");
  if (v != kSchemaVersion)
    throw Error(ErrorCode::version_mismatch,
                "schema version " + std::to_string(v) + " is not supported (expected " +
                    std::to_string(kSchemaVersion) + ")");
}

Json bindings_to_json(const Bindings& b) {
  Json j = Json::object();
  for (const auto& [k, v] : b) j[k] = value_to_json(v);
  return j;
}

Bindings bindings_from_json(const Json& j) {
  if (!j.is_object()) corrupt("bindings must be an object");
  Bindings b;
  for (auto it = j.begin(); it != j.end(); ++it) b[it.key()] = value_from_json(it.value());
  return b;
}

// ---- origins and provenance ----

const char* origin_kind(Origin::Kind k) {
  switch (k) {
    case Origin::Kind::static_decl: return "static";
    case Origin::Kind::asserted: return "asserted";
    case Origin::Kind::derived: return "derived";
    case Origin::Kind::produced: return "produced";
    case Origin::Kind::compound_member: return "member";
  }
  return "?";
}

Json origin_to_json(const Origin& o) {
  Json j{{"kind", origin_kind(o.kind)}};
  switch (o.kind) {
    case Origin::Kind::derived:
      j["rule"] = o.rule;
      j["scope"] = o.scope;
      break;
    case Origin::Kind::produced: j["event"] = o.event; break;
    case Origin::Kind::compound_member: j["compound"] = o.compound; break;
    default: break;
  }
  return j;
}

Origin origin_from_json(const Json& j) {
  std::string k = get<std::string>(j, "kind");
  if (k == "static") return Origin::static_decl();
  if (k == "asserted") return Origin::asserted();
  if (k == "derived") return Origin::derived(get<std::string>(j, "rule"), get<InstanceId>(j, "scope"));
  if (k == "produced") return Origin::produced(get<Seq>(j, "event"));
  if (k == "member") return Origin::member_of(get<InstanceId>(j, "compound"));
  corrupt("unknown origin kind '" + k + "'");
}

const char* provenance_kind(Provenance::Kind k) {
  switch (k) {
    case Provenance::Kind::external: return "external";
    case Provenance::Kind::reactive: return "reactive";
    case Provenance::Kind::consequence: return "consequence";
    case Provenance::Kind::violation: return "violation";
  }
  return "?";
}

Json provenance_to_json(const Provenance& p) {
  Json j{{"kind", provenance_kind(p.kind)}};
  switch (p.kind) {
    case Provenance::Kind::reactive:
      j["rule"] = p.rule;
      j["scope"] = p.scope;
      break;
    case Provenance::Kind::consequence: j["power"] = p.source; break;
    case Provenance::Kind::violation: j["duty"] = p.source; break;
    default: break;
  }
  return j;
}

Provenance provenance_from_json(const Json& j) {
  std::string k = get<std::string>(j, "kind");
  Provenance p;
  if (k == "external") {
    p.kind = Provenance::Kind::external;
  } else if (k == "reactive") {
    p.kind = Provenance::Kind::reactive;
    p.rule = get<std::string>(j, "rule");
    p.scope = get<InstanceId>(j, "scope");
  } else if (k == "consequence") {
    p.kind = Provenance::Kind::consequence;
    p.source = get<InstanceId>(j, "power");
  } else if (k == "violation") {
    p.kind = Provenance::Kind::violation;
    p.source = get<InstanceId>(j, "duty");
  } else {
    corrupt("unknown provenance kind '" + k + "'");
  }
  return p;
}

// ---- instances ----

Json object_to_json(const ObjectInstance& o) {
  Json descs = Json::object();
  for (const auto& [name, p] : o.descriptors) {
    descs[name] = p.derived ? Json{{"derived", true}, {"rule", p.rule}, {"scope", p.scope}}
                            : Json{{"derived", false}};
  }
  return Json{{"id", o.id},
              {"name", o.name},
              {"properties", bindings_to_json(o.properties)},
              {"descriptors", descs},
              {"origin", origin_to_json(o.origin)}};
}

ObjectInstance object_from_json(const Json& j) {
  ObjectInstance o;
  o.id = get<InstanceId>(j, "id");
  o.name = get<std::string>(j, "name");
  o.properties = bindings_from_json(req(j, "properties"));
  const Json& descs = req(j, "descriptors");
  if (!descs.is_object()) corrupt("descriptors must be an object");
  for (auto it = descs.begin(); it != descs.end(); ++it) {
    DescriptorProvenance p;
    p.derived = get<bool>(it.value(), "derived");
    if (p.derived) {
      p.rule = get<std::string>(it.value(), "rule");
      p.scope = get<InstanceId>(it.value(), "scope");
    }
    o.descriptors[it.key()] = p;
  }
  o.origin = origin_from_json(req(j, "origin"));
  return o;
}

}  // namespace

Json position_to_json(const PositionInstance& p, const InstitutionalState* s,
                      const Interpreter* interp) {
  Json j{{"id", p.id},
         {"kind", to_string(p.frame.kind)},
         {"category", to_string(p.category())},
         {"frame", to_source(frame_to_term(p.frame), true)},
         {"env", bindings_to_json(p.env)},
         {"origin", origin_to_json(p.origin)},
         {"violated", p.violated}};
  j["label"] = p.frame.label ? Json(*p.frame.label) : Json();
  if (interp && s) {
    PositionView v = interp->view(*s, p);
    j["view"] = Json{{"holder", v.holder},
                     {"counterparty", v.counterparty},
                     {"action", v.action},
                     {"consequence", v.consequence},
                     {"violation", v.violation}};
  }
  return j;
}

namespace {

PositionInstance position_from_json(const Json& j) {
  PositionInstance p;
  p.id = get<InstanceId>(j, "id");
  std::string text = get<std::string>(j, "frame");
  TermParseResult parsed = parse_term(text, "<snapshot>");
  std::optional<Frame> frame;
  if (parsed.term && !has_errors(parsed.diagnostics)) frame = term_to_frame(*parsed.term);
  if (!frame) corrupt("position " + std::to_string(p.id) + " has an unreadable frame '" + text + "'");
  p.frame = std::move(*frame);
  if (auto it = j.find("label"); it != j.end() && !it->is_null())
    p.frame.label = it->get<std::string>();
  p.env = bindings_from_json(req(j, "env"));
  p.origin = origin_from_json(req(j, "origin"));
  p.violated = get<bool>(j, "violated");
  return p;
}

Json compound_to_json(const CompoundInstance& c, const InstitutionalState* s,
                      const Interpreter* interp) {
  Json labels = Json::object();
  for (const auto& [k, id] : c.labels) labels[k] = id;
  Json j{{"id", c.id},
         {"decl", c.decl},
         {"params", bindings_to_json(c.params)},
         {"labels", labels},
         {"members", c.members},
         {"origin", origin_to_json(c.origin)}};
  if (interp && s) j["text"] = interp->render(*s, c);
  return j;
}

CompoundInstance compound_from_json(const Json& j) {
  CompoundInstance c;
  c.id = get<InstanceId>(j, "id");
  c.decl = get<std::string>(j, "decl");
  c.params = bindings_from_json(req(j, "params"));
  const Json& labels = req(j, "labels");
  if (!labels.is_object()) corrupt("labels must be an object");
  for (auto it = labels.begin(); it != labels.end(); ++it)
    c.labels[it.key()] = it.value().get<InstanceId>();
  c.members = get<std::vector<InstanceId>>(j, "members");
  c.origin = origin_from_json(req(j, "origin"));
  return c;
}

const char* event_kind(EventOccurrence::Kind k) {
  switch (k) {
    case EventOccurrence::Kind::act: return "act";
    case EventOccurrence::Kind::create: return "create";
    case EventOccurrence::Kind::remove: return "remove";
  }
  return "?";
}

Json event_to_json(const EventOccurrence& ev, const InstitutionalState* s) {
  Json j{{"seq", ev.seq},
         {"at", ev.at},
         {"kind", event_kind(ev.kind)},
         {"name", ev.name},
         {"provenance", provenance_to_json(ev.provenance)}};
  j["actor"] = ev.actor ? Json(*ev.actor) : Json();
  if (ev.kind == EventOccurrence::Kind::act) {
    j["refinements"] = bindings_to_json(ev.refinements);
    j["disabled"] = ev.disabled;
  } else {
    j["target"] = ev.target ? Json(*ev.target) : Json();
    if (!ev.flag.empty()) j["flag"] = ev.flag;
  }
  if (s) j["text"] = render_event(*s, ev);
  return j;
}

EventOccurrence event_from_json(const Json& j) {
  EventOccurrence ev;
  ev.seq = get<Seq>(j, "seq");
  ev.at = get<Ticks>(j, "at");
  std::string k = get<std::string>(j, "kind");
  if (k == "act") {
    ev.kind = EventOccurrence::Kind::act;
  } else if (k == "create") {
    ev.kind = EventOccurrence::Kind::create;
  } else if (k == "remove") {
    ev.kind = EventOccurrence::Kind::remove;
  } else {
    corrupt("unknown event kind '" + k + "'");
  }
  ev.name = get<std::string>(j, "name");
  ev.provenance = provenance_from_json(req(j, "provenance"));
  if (auto it = j.find("actor"); it != j.end() && !it->is_null()) ev.actor = it->get<InstanceId>();
  if (ev.kind == EventOccurrence::Kind::act) {
    ev.refinements = bindings_from_json(req(j, "refinements"));
    ev.disabled = get_or<bool>(j, "disabled", false);
  } else {
    if (auto it = j.find("target"); it != j.end() && !it->is_null())
      ev.target = it->get<InstanceId>();
    ev.flag = get_or<std::string>(j, "flag", "");
  }
  return ev;
}

template <class T, class F>
Json array_of(const std::vector<T>& v, F&& f) {
  Json a = Json::array();
  for (const auto& x : v) a.push_back(f(x));
  return a;
}

template <class F>
auto vector_from(const Json& j, const char* key, F&& f) {
  const Json& a = req(j, key);
  if (!a.is_array()) corrupt(std::string("'") + key + "' must be an array");
  std::vector<decltype(f(a.front()))> out;
  for (const Json& x : a) out.push_back(f(x));
  return out;
}

// Scenario refinement values: strings are symbols (or `name#id` instance
// references), numbers are ticks, booleans are booleans.
Json plain_value(const Value& v) {
  if (const auto* s = std::get_if<Symbol>(&v)) return s->name;
  if (const auto* i = std::get_if<std::int64_t>(&v)) return *i;
  if (const auto* b = std::get_if<bool>(&v)) return *b;
  if (const auto* o = std::get_if<ObjectRef>(&v)) return "#" + std::to_string(o->id);
  if (const auto* p = std::get_if<PositionRef>(&v)) return "#" + std::to_string(p->id);
  if (const auto* c = std::get_if<CompoundRef>(&v)) return "#" + std::to_string(c->id);
  return nullptr;
}

Value plain_from_json(const Json& j) {
  if (j.is_string()) return Symbol{j.get<std::string>()};
  if (j.is_boolean()) return j.get<bool>();
  if (j.is_number_integer()) return j.get<std::int64_t>();
  if (j.is_null()) return std::monostate{};
  corrupt("refinement values must be strings, integers or booleans");
}

Json plain_bindings(const Bindings& b) {
  Json j = Json::object();
  for (const auto& [k, v] : b) j[k] = plain_value(v);
  return j;
}

Bindings plain_bindings_from(const Json& j) {
  if (!j.is_object()) corrupt("expected an object of values");
  Bindings b;
  for (auto it = j.begin(); it != j.end(); ++it) b[it.key()] = plain_from_json(it.value());
  return b;
}

}  // namespace

// ---- values ------------------------------------------------------------------------

Json value_to_json(const Value& v) {
  struct Visitor {
    Json operator()(std::monostate) const { return nullptr; }
    Json operator()(bool b) const { return Json{{"bool", b}}; }
    Json operator()(std::int64_t i) const { return Json{{"int", i}}; }
    Json operator()(const Symbol& s) const { return Json{{"sym", s.name}}; }
    Json operator()(const ObjectRef& r) const { return Json{{"obj", r.id}}; }
    Json operator()(const PositionRef& r) const { return Json{{"pos", r.id}}; }
    Json operator()(const CompoundRef& r) const { return Json{{"cmp", r.id}}; }
  };
  return std::visit(Visitor{}, v);
}

Value value_from_json(const Json& j) {
  return guarded([&]() -> Value {
    if (j.is_null()) return std::monostate{};
    if (!j.is_object() || j.size() != 1) corrupt("malformed value " + j.dump());
    const auto& [tag, v] = *j.items().begin();
    if (tag == "bool") return v.get<bool>();
    if (tag == "int") return v.get<std::int64_t>();
    if (tag == "sym") return Symbol{v.get<std::string>()};
    if (tag == "obj") return ObjectRef{v.get<InstanceId>()};
    if (tag == "pos") return PositionRef{v.get<InstanceId>()};
    if (tag == "cmp") return CompoundRef{v.get<InstanceId>()};
    corrupt("unknown value tag '" + tag + "'");
  });
}

// ---- state ---------------------------------------------------------------------------

Json state_to_json(const InstitutionalState& s, const Interpreter* interp) {
  Json objects = Json::array();
  for (const auto& [id, o] : s.objects) objects.push_back(object_to_json(o));
  Json positions = Json::array();
  for (const auto& [id, p] : s.positions) positions.push_back(position_to_json(p, &s, interp));
  Json compounds = Json::array();
  for (const auto& [id, c] : s.compounds) compounds.push_back(compound_to_json(c, &s, interp));
  Json log = Json::array();
  for (const auto& ev : s.event_log) log.push_back(event_to_json(ev, &s));
  return Json{{"dpcl_schema", kSchemaVersion},
              {"clock", s.clock},
              {"next_id", s.next_id},
              {"next_seq", s.next_seq},
              {"globals", bindings_to_json(s.globals)},
              {"objects", objects},
              {"positions", positions},
              {"compounds", compounds},
              {"event_log", log}};
}

InstitutionalState state_from_json(const Json& j) {
  return guarded([&] {
    check_version(j);
    InstitutionalState s;
    s.clock = get<Ticks>(j, "clock");
    s.next_id = get<InstanceId>(j, "next_id");
    s.next_seq = get<Seq>(j, "next_seq");
    s.globals = bindings_from_json(req(j, "globals"));
    for (auto& o : vector_from(j, "objects", object_from_json)) s.objects[o.id] = std::move(o);
    for (auto& p : vector_from(j, "positions", position_from_json)) s.positions[p.id] = std::move(p);
    for (auto& c : vector_from(j, "compounds", compound_from_json)) s.compounds[c.id] = std::move(c);
    s.event_log = vector_from(j, "event_log", event_from_json);
    return s;
  });
}

// ---- deltas -----------------------------------------------------------------------------

Json delta_to_json(const StateDelta& d, const InstitutionalState* after) {
  auto pos = [&](const PositionInstance& p) { return position_to_json(p, nullptr, nullptr); };
  auto cmp = [&](const CompoundInstance& c) { return compound_to_json(c, nullptr, nullptr); };
  auto ev = [&](const EventOccurrence& e) { return event_to_json(e, after); };
  auto desc = [](const DescriptorChange& c) {
    Json j{{"object", c.object}, {"descriptor", c.descriptor}, {"added", c.added}};
    if (c.added) {
      j["derived"] = c.provenance.derived;
      if (c.provenance.derived) {
        j["rule"] = c.provenance.rule;
        j["scope"] = c.provenance.scope;
      }
    }
    return j;
  };
  return Json{{"clock_before", d.clock_before},
              {"clock_after", d.clock_after},
              {"next_id", d.next_id},
              {"next_seq", d.next_seq},
              {"objects_created", array_of(d.objects_created, object_to_json)},
              {"objects_updated", array_of(d.objects_updated, object_to_json)},
              {"objects_removed", d.objects_removed},
              {"positions_created", array_of(d.positions_created, pos)},
              {"positions_updated", array_of(d.positions_updated, pos)},
              {"positions_removed", d.positions_removed},
              {"compounds_created", array_of(d.compounds_created, cmp)},
              {"compounds_updated", array_of(d.compounds_updated, cmp)},
              {"compounds_removed", d.compounds_removed},
              {"descriptor_changes", array_of(d.descriptor_changes, desc)},
              {"violations_raised", d.violations_raised},
              {"events", array_of(d.events, ev)},
              {"disabled", d.disabled},
              {"empty", d.empty()}};
}

StateDelta delta_from_json(const Json& j) {
  return guarded([&] {
    StateDelta d;
    d.clock_before = get<Ticks>(j, "clock_before");
    d.clock_after = get<Ticks>(j, "clock_after");
    d.next_id = get<InstanceId>(j, "next_id");
    d.next_seq = get<Seq>(j, "next_seq");
    d.objects_created = vector_from(j, "objects_created", object_from_json);
    d.objects_updated = vector_from(j, "objects_updated", object_from_json);
    d.objects_removed = get<std::vector<InstanceId>>(j, "objects_removed");
    d.positions_created = vector_from(j, "positions_created", position_from_json);
    d.positions_updated = vector_from(j, "positions_updated", position_from_json);
    d.positions_removed = get<std::vector<InstanceId>>(j, "positions_removed");
    d.compounds_created = vector_from(j, "compounds_created", compound_from_json);
    d.compounds_updated = vector_from(j, "compounds_updated", compound_from_json);
    d.compounds_removed = get<std::vector<InstanceId>>(j, "compounds_removed");
    d.descriptor_changes = vector_from(j, "descriptor_changes", [](const Json& x) {
      DescriptorChange c;
      c.object = get<InstanceId>(x, "object");
      c.descriptor = get<std::string>(x, "descriptor");
      c.added = get<bool>(x, "added");
      if (c.added) {
        c.provenance.derived = get<bool>(x, "derived");
        if (c.provenance.derived) {
          c.provenance.rule = get<std::string>(x, "rule");
          c.provenance.scope = get<InstanceId>(x, "scope");
        }
      }
      return c;
    });
    d.violations_raised = get<std::vector<InstanceId>>(j, "violations_raised");
    d.events = vector_from(j, "events", event_from_json);
    d.disabled = get_or<bool>(j, "disabled", false);
    return d;
  });
}

// ---- steps and scenarios -------------------------------------------------------------------

Json step_to_json(const Step& step) {
  if (const auto* d = std::get_if<DoAction>(&step)) {
    Json body{{"actor", d->actor}, {"event", d->event}};
    if (!d->refinements.empty()) body["refinements"] = plain_bindings(d->refinements);
    return Json{{"do", body}};
  }
  if (const auto* a = std::get_if<Advance>(&step)) return Json{{"advance", to_string(a->duration)}};
  if (const auto* a = std::get_if<AssertObject>(&step)) {
    Json body{{"name", a->name}};
    if (!a->descriptors.empty()) body["descriptors"] = a->descriptors;
    if (!a->properties.empty()) body["properties"] = plain_bindings(a->properties);
    return Json{{"assert", body}};
  }
  const auto& p = std::get<Produce>(step);
  return Json{{"produce", (p.polarity == Polarity::create ? "+" : "-") + p.target}};
}

Step step_from_json(const Json& j) {
  return guarded([&]() -> Step {
    if (!j.is_object() || j.size() != 1)
      throw Error(ErrorCode::invalid_step,
                  "a step is an object with exactly one of do, advance, assert, produce");
    const auto& [kind, body] = *j.items().begin();
    if (kind == "do") {
      DoAction d;
      d.actor = get<std::string>(body, "actor");
      d.event = get<std::string>(body, "event");
      if (!d.event.empty() && d.event[0] == '#') d.event.erase(0, 1);
      if (auto it = body.find("refinements"); it != body.end())
        d.refinements = plain_bindings_from(*it);
      return d;
    }
    if (kind == "advance") {
      if (!body.is_string()) throw Error(ErrorCode::invalid_step, "advance takes a duration string");
      auto dur = parse_duration(body.get<std::string>());
      if (!dur)
        throw Error(ErrorCode::invalid_step,
                    "'" + body.get<std::string>() + "' is not a duration such as 1m or 30s");
      return Advance{*dur};
    }
    if (kind == "assert") {
      AssertObject a;
      a.name = get<std::string>(body, "name");
      a.descriptors = get_or<std::vector<std::string>>(body, "descriptors", {});
      if (auto it = body.find("properties"); it != body.end())
        a.properties = plain_bindings_from(*it);
      return a;
    }
    if (kind == "produce") {
      if (!body.is_string()) throw Error(ErrorCode::invalid_step, "produce takes a string");
      std::string text = body.get<std::string>();
      Produce p;
      if (!text.empty() && (text[0] == '+' || text[0] == '-')) {
        p.polarity = text[0] == '+' ? Polarity::create : Polarity::remove;
        text.erase(0, 1);
      }
      if (text.empty()) throw Error(ErrorCode::invalid_step, "produce needs a target");
      p.target = text;
      return p;
    }
    throw Error(ErrorCode::invalid_step, "unknown step kind '" + kind + "'");
  });
}

Json scenario_to_json(const Scenario& sc) {
  return Json{{"steps", array_of(sc.steps, step_to_json)}};
}

Scenario scenario_from_json(const Json& j) {
  return guarded([&] {
    Scenario sc;
    sc.steps = vector_from(j, "steps", step_from_json);
    return sc;
  });
}

// ---- traces ---------------------------------------------------------------------------------

Json error_to_json(ErrorCode code, const std::string& message) {
  return Json{{"code", std::string(to_string(code))}, {"message", message}};
}

Json trace_to_json(const Trace& t, const Interpreter* interp) {
  Json steps = Json::array();
  for (const TraceEntry& e : t.entries)
    steps.push_back(Json{{"step", step_to_json(e.step)},
                         {"delta", delta_to_json(e.delta, &t.final_state)},
                         {"clock", e.clock}});
  Json j{{"dpcl_schema", kSchemaVersion},
         {"initial", state_to_json(t.initial, interp)},
         {"steps", steps},
         {"final", state_to_json(t.final_state, interp)}};
  if (t.failure) {
    Json err = error_to_json(t.failure->code, t.failure->message);
    err["step"] = t.failure->step_index;
    j["error"] = err;
  } else {
    j["error"] = nullptr;
  }
  return j;
}

namespace {

ErrorCode code_from_string(const std::string& s) {
  for (int i = 0; i <= static_cast<int>(ErrorCode::io); ++i) {
    auto c = static_cast<ErrorCode>(i);
    if (to_string(c) == s) return c;
  }
  corrupt("unknown error code '" + s + "'");
}

}  // namespace

Trace trace_from_json(const Json& j) {
  return guarded([&] {
    check_version(j);
    Trace t;
    t.initial = state_from_json(req(j, "initial"));
    t.final_state = state_from_json(req(j, "final"));
    for (const Json& e : req(j, "steps")) {
      t.entries.push_back(TraceEntry{step_from_json(req(e, "step")), delta_from_json(req(e, "delta")),
                                     get<Ticks>(e, "clock")});
    }
    if (auto it = j.find("error"); it != j.end() && !it->is_null()) {
      t.failure = StepFailure{get<std::size_t>(*it, "step"),
                              code_from_string(get<std::string>(*it, "code")),
                              get<std::string>(*it, "message")};
    }
    return t;
  });
}

Json parse_json(const std::string& text) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    corrupt(std::string("malformed JSON: ") + e.what());
  }
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

}  // namespace dpcl
