#include "dpcl/interpreter.hpp"

#include <algorithm>
#include <deque>
#include <set>

#include "dpcl/parser.hpp"
#include "dpcl/printer.hpp"

namespace dpcl {

// ---- compiled program ------------------------------------------------------------

namespace {

struct RuleSite {
  std::string id;  // "main/3", "borrowing/2": declaration or member index, 1-based
  const Rule* rule = nullptr;
};

}  // namespace

struct Interpreter::Compiled {
  Program program;
  std::vector<const Frame*> frames;
  std::vector<RuleSite> transforms;
  std::vector<RuleSite> reactions;
  std::map<std::string, const CompoundDecl*> compounds;
  std::map<std::string, std::vector<RuleSite>> compound_transforms;
  std::map<std::string, std::vector<RuleSite>> compound_reactions;

  explicit Compiled(Program p) : program(std::move(p)) {
    std::size_t index = 0;
    for (const Declaration& d : program.declarations) {
      ++index;
      if (const auto* f = std::get_if<Frame>(&d)) {
        frames.push_back(f);
      } else if (const auto* r = std::get_if<Rule>(&d)) {
        auto& list = r->kind == RuleKind::transformational ? transforms : reactions;
        list.push_back(RuleSite{"main/" + std::to_string(index), r});
      } else {
        const auto& c = std::get<CompoundDecl>(d);
        compounds.emplace(c.name, &c);
        std::size_t member = 0;
        for (const Member& m : c.members) {
          ++member;
          const auto* r = std::get_if<Rule>(&m);
          if (!r) continue;
          auto& list = r->kind == RuleKind::transformational ? compound_transforms[c.name]
                                                              : compound_reactions[c.name];
          list.push_back(RuleSite{c.name + "/" + std::to_string(member), r});
        }
      }
    }
  }

  const CompoundDecl* compound(const std::string& name) const {
    auto it = compounds.find(name);
    return it == compounds.end() ? nullptr : it->second;
  }

  const std::vector<RuleSite>& rules_of(const std::map<std::string, std::vector<RuleSite>>& m,
                                        const std::string& decl) const {
    static const std::vector<RuleSite> none;
    auto it = m.find(decl);
    return it == m.end() ? none : it->second;
  }
};

namespace {

// ---- values ----------------------------------------------------------------------

std::optional<std::string> instance_name(const InstitutionalState& s, const Value& v) {
  if (const auto* o = std::get_if<ObjectRef>(&v)) {
    if (auto it = s.objects.find(o->id); it != s.objects.end()) return it->second.name;
  } else if (const auto* p = std::get_if<PositionRef>(&v)) {
    if (auto it = s.positions.find(p->id); it != s.positions.end() && it->second.frame.label)
      return *it->second.frame.label;
  } else if (const auto* c = std::get_if<CompoundRef>(&v)) {
    if (auto it = s.compounds.find(c->id); it != s.compounds.end()) return it->second.decl;
  }
  return std::nullopt;
}

/// Equality that also lets a bare symbol stand for the instance carrying that
/// name, so `target: d1` given as text matches the duty labelled d1.
bool loose_equal(const InstitutionalState& s, const Value& a, const Value& b) {
  if (a == b) return true;
  if (const auto* sa = std::get_if<Symbol>(&a)) {
    auto n = instance_name(s, b);
    return n && *n == sa->name;
  }
  if (const auto* sb = std::get_if<Symbol>(&b)) {
    auto n = instance_name(s, a);
    return n && *n == sb->name;
  }
  return false;
}

std::string value_kind(const Value& v) {
  switch (v.index()) {
    case 0: return "nothing";
    case 1: return "a boolean";
    case 2: return "an integer";
    case 3: return "a symbol";
    case 4: return "an object";
    case 5: return "a position";
    default: return "a compound";
  }
}

/// `name#7` or `#7`.
std::optional<std::pair<std::string, InstanceId>> split_instance_ref(const std::string& text) {
  auto hash = text.find('#');
  if (hash == std::string::npos || hash + 1 >= text.size()) return std::nullopt;
  std::string name = text.substr(0, hash);
  std::string digits = text.substr(hash + 1);
  if (!name.empty() && !is_identifier(name)) return std::nullopt;
  if (digits.size() > 18 || !std::all_of(digits.begin(), digits.end(),
                                         [](char c) { return c >= '0' && c <= '9'; }))
    return std::nullopt;
  return std::make_pair(name, static_cast<InstanceId>(std::stoull(digits)));
}

struct Scope {
  Bindings env;
  const Frame* frame = nullptr;  // fields of this frame are in scope
  std::optional<InstanceId> actor;  // binds `holder`
};

struct Cause {
  Provenance provenance;
  std::optional<InstanceId> actor;
};

// ---- engine --------------------------------------------------------------------

class Engine {
 public:
  Engine(const Interpreter::Compiled& c, const Limits& limits, InstitutionalState& s)
      : c_(c), limits_(limits), s_(s) {}

  // -- environments --

  Bindings compound_env(const CompoundInstance& ci) const {
    Bindings env = s_.globals;
    for (const auto& [k, v] : ci.params) env[k] = v;
    for (const auto& [k, id] : ci.labels) env[k] = PositionRef{id};
    env[ci.decl] = CompoundRef{ci.id};
    return env;
  }

  Bindings scope_env(InstanceId scope) const {
    if (scope == 0) return s_.globals;
    return compound_env(s_.compounds.at(scope));
  }

  // -- evaluation --

  bool is_bound(const std::string& name, const Scope& sc) const {
    if (sc.actor && name == "holder") return true;
    if (sc.frame && sc.frame->field(name)) return true;
    return sc.env.count(name) > 0;
  }

  std::optional<Value> lookup(const std::string& name, const Scope& sc) const {
    if (sc.actor && name == "holder") return ObjectRef{*sc.actor};
    if (sc.frame) {
      if (const Term* t = sc.frame->field(name)) {
        Scope inner{sc.env, nullptr, sc.actor};
        return eval(*t, inner);
      }
    }
    if (auto it = sc.env.find(name); it != sc.env.end()) return it->second;
    return std::nullopt;
  }

  Value resolve_global(const std::string& name) const {
    if (const ObjectInstance* o = s_.find_object(name)) return ObjectRef{o->id};
    return Symbol{name};
  }

  Value field_of(const Value& base, const std::string& seg, const std::string& shown) const {
    if (const auto* o = std::get_if<ObjectRef>(&base)) {
      auto it = s_.objects.find(o->id);
      if (it != s_.objects.end()) {
        auto p = it->second.properties.find(seg);
        if (p != it->second.properties.end()) return p->second;
        throw Error(ErrorCode::unresolvable_path,
                    "object '" + it->second.name + "' has no property '" + seg + "' in '" +
                        shown + "'");
      }
    } else if (const auto* p = std::get_if<PositionRef>(&base)) {
      auto it = s_.positions.find(p->id);
      if (it != s_.positions.end()) {
        const PositionInstance& pos = it->second;
        if (seg == "violation") return pos.violated;
        if (const Term* t = pos.frame.field(seg)) return eval(*t, Scope{pos.env, nullptr, {}});
        throw Error(ErrorCode::unresolvable_path,
                    "position has no field '" + seg + "' in '" + shown + "'");
      }
    } else if (const auto* c = std::get_if<CompoundRef>(&base)) {
      auto it = s_.compounds.find(c->id);
      if (it != s_.compounds.end()) {
        if (auto p = it->second.params.find(seg); p != it->second.params.end()) return p->second;
        if (auto l = it->second.labels.find(seg); l != it->second.labels.end())
          return PositionRef{l->second};
        throw Error(ErrorCode::unresolvable_path,
                    "compound '" + it->second.decl + "' has no member '" + seg + "' in '" +
                        shown + "'");
      }
    }
    throw Error(ErrorCode::unresolvable_path,
                "cannot access '" + seg + "' on " + render_value(s_, base) + " in '" + shown + "'");
  }

  Value eval_path(const std::vector<std::string>& path, std::size_t count, const Scope& sc,
                  const std::string& shown) const {
    Value v;
    if (auto b = lookup(path[0], sc)) {
      v = *b;
    } else {
      v = resolve_global(path[0]);
    }
    for (std::size_t i = 1; i < count; ++i) v = field_of(v, path[i], shown);
    return v;
  }

  static std::int64_t as_int(const Value& v, const Term& t) {
    if (const auto* i = std::get_if<std::int64_t>(&v)) return *i;
    throw Error(ErrorCode::type_error,
                "'" + to_source(t, true) + "' is " + value_kind(v) + ", not a number");
  }

  Value eval(const Term& t, const Scope& sc) const {
    if (const auto* a = t.as<Atom>()) {
      if (auto b = lookup(a->name, sc)) return *b;
      return resolve_global(a->name);
    }
    if (const auto* d = t.as<DottedRef>())
      return eval_path(d->path, d->path.size(), sc, to_source(t, true));
    if (t.is<NowCall>()) return s_.clock;
    if (const auto* d = t.as<DurationLiteral>()) return duration_to_ticks(d->value);
    if (const auto* v = t.as<TimeValue>()) return v->ticks;
    if (const auto* a = t.as<Arith>()) {
      std::int64_t l = as_int(eval(*a->lhs, sc), *a->lhs);
      std::int64_t r = as_int(eval(*a->rhs, sc), *a->rhs);
      return a->op == ArithOp::add ? checked_add(l, r) : checked_sub(l, r);
    }
    if (const auto* c = t.as<Comparison>()) {
      Value l = eval(*c->lhs, sc);
      Value r = eval(*c->rhs, sc);
      switch (c->op) {
        case CompareOp::eq: return loose_equal(s_, l, r);
        case CompareOp::ne: return !loose_equal(s_, l, r);
        default: break;
      }
      std::int64_t a = as_int(l, *c->lhs);
      std::int64_t b = as_int(r, *c->rhs);
      switch (c->op) {
        case CompareOp::gt: return a > b;
        case CompareOp::ge: return a >= b;
        case CompareOp::lt: return a < b;
        case CompareOp::le: return a <= b;
        default: return false;
      }
    }
    if (const auto* q = t.as<Qualification>()) {
      Value v = eval(*q->subject, sc);
      if (const auto* o = std::get_if<ObjectRef>(&v)) {
        auto it = s_.objects.find(o->id);
        return it != s_.objects.end() && it->second.has_descriptor(q->descriptor);
      }
      return false;
    }
    throw Error(ErrorCode::type_error, "'" + to_source(t, true) + "' has no value");
  }

  bool truthy(const Value& v) const {
    if (const auto* b = std::get_if<bool>(&v)) return *b;
    if (const auto* i = std::get_if<std::int64_t>(&v)) return *i != 0;
    if (const auto* o = std::get_if<ObjectRef>(&v)) return s_.objects.count(o->id) > 0;
    if (const auto* p = std::get_if<PositionRef>(&v)) return s_.positions.count(p->id) > 0;
    if (const auto* c = std::get_if<CompoundRef>(&v)) return s_.compounds.count(c->id) > 0;
    return false;
  }

  /// Condition semantics: an unbound atom holds when some object carries that
  /// name or descriptor, or a compound of that name is live. Evaluation
  /// errors make the condition false.
  bool holds(const Term& t, const Scope& sc) const {
    if (const auto* a = t.as<Alternation>()) {
      for (const Term& o : a->options)
        if (holds(o, sc)) return true;
      return false;
    }
    if (const auto* a = t.as<Atom>(); a && !is_bound(a->name, sc)) {
      for (const auto& [id, o] : s_.objects)
        if (o.name == a->name || o.has_descriptor(a->name)) return true;
      for (const auto& [id, ci] : s_.compounds)
        if (ci.decl == a->name) return true;
      return false;
    }
    try {
      return truthy(eval(t, sc));
    } catch (const Error& e) {
      if (e.code() == ErrorCode::arithmetic_overflow) throw;
      return false;
    }
  }

  // -- matching --

  bool holder_matches(const Term& pattern, const Scope& sc, InstanceId actor) const {
    auto it = s_.objects.find(actor);
    if (it == s_.objects.end()) return false;
    const ObjectInstance& obj = it->second;
    if (const auto* a = pattern.as<Alternation>()) {
      for (const Term& o : a->options)
        if (holder_matches(o, sc, actor)) return true;
      return false;
    }
    if (const auto* a = pattern.as<Atom>(); a && !is_bound(a->name, sc))
      return obj.has_descriptor(a->name) || obj.name == a->name;
    try {
      return loose_equal(s_, eval(pattern, sc), ObjectRef{actor});
    } catch (const Error&) {
      return false;
    }
  }

  /// Every pattern field must be present in the event. Atoms unbound in the
  /// scope are pattern variables and bind to the event's value.
  bool refinements_match(const Fields& pattern, const Scope& sc, const Bindings& actual,
                         Bindings& binds) const {
    for (const Field& f : pattern) {
      auto it = actual.find(f.name);
      if (it == actual.end()) return false;
      if (const auto* a = f.value.as<Atom>(); a && !is_bound(a->name, sc)) {
        auto b = binds.find(a->name);
        if (b == binds.end()) {
          binds.emplace(a->name, it->second);
          continue;
        }
        if (!loose_equal(s_, b->second, it->second)) return false;
        continue;
      }
      try {
        if (!loose_equal(s_, eval(f.value, sc), it->second)) return false;
      } catch (const Error&) {
        return false;
      }
    }
    return true;
  }

  bool action_matches(const PositionInstance& p, InstanceId actor, const std::string& name,
                      const Bindings& refinements, Bindings& binds) const {
    const Term* holder = p.frame.field("holder");
    const Term* action = p.frame.field("action");
    if (!holder || !action) return false;
    const auto* ev = action->as<EventRef>();
    if (!ev || ev->name != name) return false;
    if (!holder_matches(*holder, Scope{p.env, nullptr, {}}, actor)) return false;
    return refinements_match(ev->refinements, Scope{p.env, &p.frame, actor}, refinements, binds);
  }

  // -- events --

  std::size_t log(EventOccurrence ev) {
    ev.seq = s_.next_seq++;
    ev.at = s_.clock;
    s_.event_log.push_back(std::move(ev));
    return s_.event_log.size() - 1;
  }

  Seq emit(EventOccurrence ev) {
    std::size_t idx = log(std::move(ev));
    queue_.push_back(idx);
    return s_.event_log[idx].seq;
  }

  Seq emit_production(EventOccurrence::Kind kind, std::string name, InstanceId target,
                      const Cause& cause, std::string flag = {}) {
    EventOccurrence ev;
    ev.kind = kind;
    ev.actor = cause.actor;
    ev.name = std::move(name);
    ev.target = target;
    ev.flag = std::move(flag);
    ev.provenance = cause.provenance;
    return emit(std::move(ev));
  }

  void perform_act(std::optional<InstanceId> actor, const std::string& name, Bindings refinements,
                   const Provenance& provenance, bool external) {
    EventOccurrence ev;
    ev.kind = EventOccurrence::Kind::act;
    ev.actor = actor;
    ev.name = name;
    ev.refinements = refinements;
    ev.provenance = provenance;
    std::size_t idx = log(std::move(ev));

    struct Enabled {
      InstanceId id;
      Bindings env;
    };
    std::vector<Enabled> powers;
    std::vector<InstanceId> duties;
    if (actor) {
      for (const auto& [id, p] : s_.positions) {
        if (p.category() == PositionCategory::other) continue;
        if (p.category() == PositionCategory::duty && p.violated) continue;
        Bindings binds;
        if (!action_matches(p, *actor, name, refinements, binds)) continue;
        if (p.category() == PositionCategory::duty) {
          duties.push_back(id);
          continue;
        }
        Bindings env = p.env;
        for (auto& [k, v] : binds) env[k] = v;
        powers.push_back(Enabled{id, std::move(env)});
      }
    }
    if (powers.empty()) s_.event_log[idx].disabled = true;
    if (external && powers.empty() && duties.empty()) return;
    queue_.push_back(idx);

    for (const Enabled& e : powers) {
      auto it = s_.positions.find(e.id);
      if (it == s_.positions.end()) continue;
      const Frame frame = it->second.frame;
      const Term* consequence = frame.field("consequence");
      if (!consequence) continue;
      Provenance prov{Provenance::Kind::consequence, {}, 0, e.id};
      apply_effect(*consequence, Scope{e.env, &frame, actor}, Cause{prov, actor});
    }
    for (InstanceId d : duties) {
      auto it = s_.positions.find(d);
      if (it == s_.positions.end() || it->second.violated) continue;
      drop_position(d);
    }
  }

  // -- effects --

  void apply_effect(const Term& t, const Scope& sc, const Cause& cause) {
    if (const auto* p = t.as<Production>()) {
      if (p->polarity == Polarity::create) {
        create(*p->target, sc, cause);
      } else {
        remove(*p->target, sc, cause);
      }
      return;
    }
    if (const auto* q = t.as<Qualification>()) {
      qualify(*q, sc);
      return;
    }
    if (const auto* e = t.as<EventRef>()) {
      Bindings refinements;
      for (const Field& f : e->refinements) refinements[f.name] = eval(f.value, sc);
      perform_act(cause.actor, e->name, std::move(refinements), cause.provenance, false);
      return;
    }
    create(t, sc, cause);
  }

  void qualify(const Qualification& q, const Scope& sc) {
    Value v = eval(*q.subject, sc);
    const auto* o = std::get_if<ObjectRef>(&v);
    if (!o || !s_.objects.count(o->id))
      throw Error(ErrorCode::type_error, "'" + to_source(*q.subject, true) +
                                             "' does not denote an object that can be qualified");
    s_.objects.at(o->id).descriptors[q.descriptor] = DescriptorProvenance{};
  }

  Bindings compound_args(const CompoundDecl& decl, const Term& t, const Scope& sc) const {
    Bindings params;
    if (const auto* call = t.as<CompoundCall>()) {
      if (call->args.size() != decl.params.size())
        throw Error(ErrorCode::type_error, "compound '" + decl.name + "' takes " +
                                               std::to_string(decl.params.size()) + " argument(s)");
      for (std::size_t i = 0; i < decl.params.size(); ++i)
        params[decl.params[i]] = eval(call->args[i], sc);
    } else if (const auto* r = t.as<RefinedObject>()) {
      for (const std::string& p : decl.params) {
        const Term* v = find_field(r->fields, p);
        if (!v) throw Error(ErrorCode::type_error, "missing parameter '" + p + "' of '" + decl.name + "'");
        params[p] = eval(*v, sc);
      }
    } else if (!decl.params.empty()) {
      throw Error(ErrorCode::type_error, "compound '" + decl.name + "' needs arguments");
    }
    return params;
  }

  const CompoundDecl* compound_decl_of(const Term& t) const {
    if (const auto* call = t.as<CompoundCall>()) return c_.compound(call->name);
    if (const auto* r = t.as<RefinedObject>()) return c_.compound(r->head);
    if (const auto* a = t.as<Atom>()) return c_.compound(a->name);
    return nullptr;
  }

  /// Creates the compound and its member positions. A production event is
  /// emitted when `cause` is given; derived compounds appear silently.
  InstanceId instantiate(const CompoundDecl& decl, Bindings params, const Origin& origin,
                         const Cause* cause) {
    InstanceId cid = s_.next_id++;
    Origin own = origin;
    if (cause) own = Origin::produced(emit_production(EventOccurrence::Kind::create, decl.name, cid, *cause));
    CompoundInstance ci{cid, decl.name, std::move(params), {}, {}, own};
    std::vector<const Frame*> frames;
    for (const Member& m : decl.members) {
      const auto* f = std::get_if<Frame>(&m);
      if (!f) continue;
      InstanceId pid = s_.next_id++;
      if (f->label) ci.labels[*f->label] = pid;
      ci.members.push_back(pid);
      frames.push_back(f);
    }
    Bindings env = compound_env(ci);
    for (std::size_t i = 0; i < frames.size(); ++i) {
      InstanceId pid = ci.members[i];
      s_.positions[pid] = PositionInstance{pid, *frames[i], env, Origin::member_of(cid), false};
    }
    s_.compounds[cid] = std::move(ci);
    return cid;
  }

  void create(const Term& t, const Scope& sc, const Cause& cause) {
    if (auto frame = term_to_frame(t)) {
      InstanceId id = s_.next_id++;
      Seq seq = emit_production(EventOccurrence::Kind::create, std::string(to_string(frame->kind)),
                                id, cause);
      s_.positions[id] = PositionInstance{id, std::move(*frame), sc.env, Origin::produced(seq), false};
      if (sc.actor) s_.positions[id].env["holder"] = ObjectRef{*sc.actor};
      return;
    }
    if (const CompoundDecl* decl = compound_decl_of(t)) {
      if (t.is<CompoundCall>() || t.is<RefinedObject>() || decl->params.empty()) {
        instantiate(*decl, compound_args(*decl, t, sc), Origin{}, &cause);
        return;
      }
    }
    if (const auto* d = t.as<DottedRef>()) {
      std::string shown = to_source(t, true);
      if (d->path.back() != "violation")
        throw Error(ErrorCode::type_error, "'" + shown + "' is not a producible flag");
      Value v = eval_path(d->path, d->path.size() - 1, sc, shown);
      const auto* p = std::get_if<PositionRef>(&v);
      if (!p || !s_.positions.count(p->id) ||
          s_.positions.at(p->id).category() != PositionCategory::duty)
        throw Error(ErrorCode::missing_target, "'" + shown + "' does not name a live duty");
      raise_violation(p->id, cause.provenance, cause.actor);
      return;
    }
    std::string name;
    Bindings props;
    if (const auto* a = t.as<Atom>()) {
      name = a->name;
    } else if (const auto* r = t.as<RefinedObject>()) {
      name = r->head;
      for (const Field& f : r->fields) props[f.name] = eval(f.value, sc);
    } else {
      throw Error(ErrorCode::type_error, "cannot produce '" + to_source(t, true) + "'");
    }
    if (s_.find_object(name)) return;
    InstanceId id = s_.next_id++;
    Seq seq = emit_production(EventOccurrence::Kind::create, name, id, cause);
    s_.objects[id] = ObjectInstance{id, name, std::move(props), {}, Origin::produced(seq)};
  }

  void raise_violation(InstanceId duty, const Provenance& provenance,
                       std::optional<InstanceId> actor = std::nullopt) {
    PositionInstance& p = s_.positions.at(duty);
    if (p.violated) return;
    p.violated = true;
    std::string name = p.frame.label ? *p.frame.label : "duty#" + std::to_string(duty);
    emit_production(EventOccurrence::Kind::create, name, duty, Cause{provenance, actor},
                    "violation");
  }

  void remove(const Term& t, const Scope& sc, const Cause& cause) {
    std::string shown = to_source(t, true);
    if (const auto* a = t.as<Atom>()) {
      if (auto v = lookup(a->name, sc)) {
        remove_value(*v, shown, cause);
        return;
      }
      remove_named(a->name, shown, cause);
      return;
    }
    if (const auto* d = t.as<DottedRef>()) {
      if (d->path.back() == "violation")
        throw Error(ErrorCode::type_error, "violation flags cannot be retracted");
      remove_value(eval(t, sc), shown, cause);
      return;
    }
    if (const auto* call = t.as<CompoundCall>()) {
      const CompoundDecl* decl = c_.compound(call->name);
      if (!decl) throw Error(ErrorCode::missing_target, "no instance matches '" + shown + "'");
      Bindings params = compound_args(*decl, t, sc);
      std::vector<InstanceId> hits;
      for (const auto& [id, ci] : s_.compounds) {
        if (ci.decl != decl->name) continue;
        bool same = true;
        for (const auto& [k, v] : params) {
          auto it = ci.params.find(k);
          same = same && it != ci.params.end() && loose_equal(s_, it->second, v);
        }
        if (same) hits.push_back(id);
      }
      if (hits.empty()) throw Error(ErrorCode::missing_target, "no instance matches '" + shown + "'");
      for (InstanceId id : hits) remove_compound(id, cause);
      return;
    }
    if (const auto* r = t.as<RefinedObject>()) {
      remove_named(r->head, shown, cause);
      return;
    }
    throw Error(ErrorCode::type_error, "cannot remove '" + shown + "'");
  }

  void remove_named(const std::string& name, const std::string& shown, const Cause& cause) {
    if (const ObjectInstance* o = s_.find_object(name)) {
      remove_object(o->id, cause);
      return;
    }
    std::vector<InstanceId> hits;
    for (const auto& [id, ci] : s_.compounds)
      if (ci.decl == name) hits.push_back(id);
    if (hits.empty()) throw Error(ErrorCode::missing_target, "no instance matches '" + shown + "'");
    for (InstanceId id : hits) remove_compound(id, cause);
  }

  void remove_value(const Value& v, const std::string& shown, const Cause& cause) {
    if (const auto* o = std::get_if<ObjectRef>(&v); o && s_.objects.count(o->id)) {
      remove_object(o->id, cause);
    } else if (const auto* p = std::get_if<PositionRef>(&v); p && s_.positions.count(p->id)) {
      remove_position(p->id, cause);
    } else if (const auto* c = std::get_if<CompoundRef>(&v); c && s_.compounds.count(c->id)) {
      remove_compound(c->id, cause);
    } else if (const auto* sym = std::get_if<Symbol>(&v)) {
      remove_named(sym->name, shown, cause);
    } else {
      throw Error(ErrorCode::missing_target, "no instance matches '" + shown + "'");
    }
  }

  void remove_object(InstanceId id, const Cause& cause) {
    emit_production(EventOccurrence::Kind::remove, s_.objects.at(id).name, id, cause);
    s_.objects.erase(id);
  }

  void remove_position(InstanceId id, const Cause& cause) {
    const PositionInstance& p = s_.positions.at(id);
    std::string name = p.frame.label ? *p.frame.label : std::string(to_string(p.frame.kind));
    emit_production(EventOccurrence::Kind::remove, std::move(name), id, cause);
    drop_position(id);
  }

  void remove_compound(InstanceId id, const Cause& cause) {
    if (!s_.compounds.count(id)) return;
    emit_production(EventOccurrence::Kind::remove, s_.compounds.at(id).decl, id, cause);
    drop_compound(id);
  }

  // Silent removals, used by discharge and closure retraction.
  void drop_position(InstanceId id) {
    auto it = s_.positions.find(id);
    if (it == s_.positions.end()) return;
    if (it->second.origin.kind == Origin::Kind::compound_member) {
      auto c = s_.compounds.find(it->second.origin.compound);
      if (c != s_.compounds.end()) {
        auto& m = c->second.members;
        m.erase(std::remove(m.begin(), m.end(), id), m.end());
      }
    }
    s_.positions.erase(it);
  }

  void drop_compound(InstanceId id) {
    auto it = s_.compounds.find(id);
    if (it == s_.compounds.end()) return;
    for (InstanceId m : it->second.members) s_.positions.erase(m);
    s_.compounds.erase(it);
  }

  // -- reactive cascade --

  bool trigger_matches(const Term& trigger, const Scope& sc, const EventOccurrence& ev,
                       Bindings& binds) const {
    if (const auto* e = trigger.as<EventRef>()) {
      return ev.kind == EventOccurrence::Kind::act && ev.name == e->name &&
             refinements_match(e->refinements, sc, ev.refinements, binds);
    }
    const auto* p = trigger.as<Production>();
    if (!p || ev.kind == EventOccurrence::Kind::act) return false;
    if ((p->polarity == Polarity::create) != (ev.kind == EventOccurrence::Kind::create))
      return false;
    const Term& target = *p->target;
    try {
      if (const auto* d = target.as<DottedRef>()) {
        if (ev.flag.empty()) {
          Value v = eval(target, sc);
          return ev.target && loose_target(v, *ev.target);
        }
        if (d->path.back() != ev.flag) return false;
        Value v = eval_path(d->path, d->path.size() - 1, sc, to_source(target, true));
        return ev.target && loose_target(v, *ev.target);
      }
    } catch (const Error&) {
      return false;
    }
    if (!ev.flag.empty()) return false;
    if (const auto* a = target.as<Atom>()) {
      if (auto v = lookup(a->name, sc); v && !std::holds_alternative<Symbol>(*v))
        return ev.target && loose_target(*v, *ev.target);
      return ev.name == a->name;
    }
    if (const auto* r = target.as<RefinedObject>()) return ev.name == r->head;
    if (const auto* c = target.as<CompoundCall>()) return ev.name == c->name;
    return false;
  }

  static bool loose_target(const Value& v, InstanceId target) {
    if (const auto* o = std::get_if<ObjectRef>(&v)) return o->id == target;
    if (const auto* p = std::get_if<PositionRef>(&v)) return p->id == target;
    if (const auto* c = std::get_if<CompoundRef>(&v)) return c->id == target;
    return false;
  }

  void run_cascade() {
    while (!queue_.empty()) {
      const EventOccurrence ev = s_.event_log[queue_.front()];
      queue_.pop_front();
      for (const RuleSite& site : c_.reactions) fire(site, 0, ev);
      std::vector<std::pair<InstanceId, std::string>> scopes;
      for (const auto& [id, ci] : s_.compounds) scopes.emplace_back(id, ci.decl);
      for (const auto& [id, decl] : scopes)
        for (const RuleSite& site : c_.rules_of(c_.compound_reactions, decl))
          if (s_.compounds.count(id)) fire(site, id, ev);
    }
  }

  void fire(const RuleSite& site, InstanceId scope, const EventOccurrence& ev) {
    Scope sc{scope_env(scope), nullptr, std::nullopt};
    Bindings binds;
    if (!trigger_matches(site.rule->lhs, sc, ev, binds)) return;
    if (++firings_ > limits_.cascade_budget)
      throw Error(ErrorCode::cascade_limit,
                  "reactive cascade exceeded " + std::to_string(limits_.cascade_budget) +
                      " firings (rule " + site.id + ")");
    for (auto& [k, v] : binds) sc.env[k] = v;
    Provenance prov{Provenance::Kind::reactive, site.id, scope, 0};
    apply_effect(site.rule->rhs, sc, Cause{prov, ev.actor});
  }

  // -- closure --

  bool supported(const std::string& rule, InstanceId scope) const {
    for (const auto& [id, p] : s_.positions)
      if (p.origin.is_derived_by(rule, scope)) return true;
    for (const auto& [id, ci] : s_.compounds)
      if (ci.origin.is_derived_by(rule, scope)) return true;
    for (const auto& [id, o] : s_.objects) {
      if (o.origin.is_derived_by(rule, scope)) return true;
      for (const auto& [d, prov] : o.descriptors)
        if (prov.derived && prov.rule == rule && prov.scope == scope) return true;
    }
    return false;
  }

  void retract(const std::string& rule, InstanceId scope) {
    retract_if([&](const Origin& o) { return o.is_derived_by(rule, scope); },
               [&](const DescriptorProvenance& p) {
                 return p.derived && p.rule == rule && p.scope == scope;
               });
  }

  template <class OriginPred, class DescPred>
  bool retract_if(OriginPred origin_pred, DescPred desc_pred) {
    bool changed = false;
    std::vector<InstanceId> doomed;
    for (const auto& [id, ci] : s_.compounds)
      if (origin_pred(ci.origin)) doomed.push_back(id);
    for (InstanceId id : doomed) drop_compound(id);
    changed = changed || !doomed.empty();
    doomed.clear();
    for (const auto& [id, p] : s_.positions)
      if (origin_pred(p.origin)) doomed.push_back(id);
    for (InstanceId id : doomed) drop_position(id);
    changed = changed || !doomed.empty();
    doomed.clear();
    for (const auto& [id, o] : s_.objects)
      if (origin_pred(o.origin)) doomed.push_back(id);
    for (InstanceId id : doomed) s_.objects.erase(id);
    changed = changed || !doomed.empty();
    for (auto& [id, o] : s_.objects) {
      for (auto it = o.descriptors.begin(); it != o.descriptors.end();) {
        if (desc_pred(it->second)) {
          it = o.descriptors.erase(it);
          changed = true;
        } else {
          ++it;
        }
      }
    }
    return changed;
  }

  bool retract_orphans() {
    auto orphan = [&](InstanceId scope) { return scope != 0 && !s_.compounds.count(scope); };
    return retract_if(
        [&](const Origin& o) { return o.kind == Origin::Kind::derived && orphan(o.scope); },
        [&](const DescriptorProvenance& p) { return p.derived && orphan(p.scope); });
  }

  bool derive(const RuleSite& site, InstanceId scope, const Scope& sc) {
    const Term* t = &site.rule->rhs;
    if (const auto* p = t->as<Production>()) t = &*p->target;
    Origin origin = Origin::derived(site.id, scope);
    if (auto frame = term_to_frame(*t)) {
      InstanceId id = s_.next_id++;
      s_.positions[id] = PositionInstance{id, std::move(*frame), sc.env, origin, false};
      return true;
    }
    if (const CompoundDecl* decl = compound_decl_of(*t)) {
      if (t->is<CompoundCall>() || t->is<RefinedObject>() || decl->params.empty()) {
        instantiate(*decl, compound_args(*decl, *t, sc), origin, nullptr);
        return true;
      }
    }
    if (const auto* q = t->as<Qualification>()) {
      Value v = eval(*q->subject, sc);
      const auto* o = std::get_if<ObjectRef>(&v);
      if (!o || !s_.objects.count(o->id)) return false;
      auto& descs = s_.objects.at(o->id).descriptors;
      if (descs.count(q->descriptor)) return false;
      descs[q->descriptor] = DescriptorProvenance{true, site.id, scope};
      return true;
    }
    std::string name;
    Bindings props;
    if (const auto* a = t->as<Atom>()) {
      name = a->name;
    } else if (const auto* r = t->as<RefinedObject>()) {
      name = r->head;
      for (const Field& f : r->fields) props[f.name] = eval(f.value, sc);
    } else {
      throw Error(ErrorCode::type_error, "cannot derive '" + to_source(*t, true) + "'");
    }
    if (s_.find_object(name)) return false;
    InstanceId id = s_.next_id++;
    s_.objects[id] = ObjectInstance{id, name, std::move(props), {}, origin};
    return true;
  }

  void closure() {
    for (std::size_t pass = 0; pass < limits_.closure_passes; ++pass) {
      bool changed = retract_orphans();
      std::vector<std::pair<const RuleSite*, InstanceId>> sites;
      for (const RuleSite& site : c_.transforms) sites.emplace_back(&site, 0);
      for (const auto& [id, ci] : s_.compounds)
        for (const RuleSite& site : c_.rules_of(c_.compound_transforms, ci.decl))
          sites.emplace_back(&site, id);
      for (const auto& [site, scope] : sites) {
        if (scope != 0 && !s_.compounds.count(scope)) continue;
        Scope sc{scope_env(scope), nullptr, std::nullopt};
        bool cond = holds(site->rule->lhs, sc);
        bool present = supported(site->id, scope);
        if (cond && !present) {
          changed = derive(*site, scope, sc) || changed;
        } else if (!cond && present) {
          retract(site->id, scope);
          changed = true;
        }
      }
      if (!changed) return;
    }
    throw Error(ErrorCode::closure_divergence,
                "closure did not converge within " + std::to_string(limits_.closure_passes) +
                    " passes");
  }

  /// Closure, then violation detection, until nothing more happens.
  void settle() {
    for (std::size_t round = 0;; ++round) {
      if (round > limits_.cascade_budget)
        throw Error(ErrorCode::cascade_limit, "violation detection did not settle");
      closure();
      std::vector<InstanceId> due;
      for (const auto& [id, p] : s_.positions) {
        if (p.category() != PositionCategory::duty || p.violated) continue;
        const Term* v = p.frame.field("violation");
        if (v && holds(*v, Scope{p.env, &p.frame, std::nullopt})) due.push_back(id);
      }
      if (due.empty()) return;
      for (InstanceId id : due)
        if (s_.positions.count(id))
          raise_violation(id, Provenance{Provenance::Kind::violation, {}, 0, id});
      run_cascade();
    }
  }

  // -- static positions --

  void init() {
    std::vector<std::pair<InstanceId, const Frame*>> made;
    for (const Frame* f : c_.frames) {
      InstanceId id = s_.next_id++;
      if (f->label) s_.globals[*f->label] = PositionRef{id};
      made.emplace_back(id, f);
    }
    for (const auto& [id, f] : made)
      s_.positions[id] = PositionInstance{id, *f, s_.globals, Origin::static_decl(), false};
  }

  // -- step helpers --

  Value resolve_refinement(const Value& v) const {
    const auto* sym = std::get_if<Symbol>(&v);
    if (!sym) return v;
    auto ref = split_instance_ref(sym->name);
    if (!ref) return v;
    InstanceId id = ref->second;
    if (s_.objects.count(id)) return ObjectRef{id};
    if (s_.positions.count(id)) return PositionRef{id};
    if (s_.compounds.count(id)) return CompoundRef{id};
    throw Error(ErrorCode::unresolvable_path, "no instance '" + sym->name + "'");
  }

  void remove_instance(InstanceId id, const std::string& shown) {
    Cause cause{Provenance{}, std::nullopt};
    if (s_.objects.count(id)) return remove_object(id, cause);
    if (s_.positions.count(id)) return remove_position(id, cause);
    if (s_.compounds.count(id)) return remove_compound(id, cause);
    throw Error(ErrorCode::missing_target, "no instance '" + shown + "'");
  }

  std::string instance_label(InstanceId id) const {
    if (auto it = s_.objects.find(id); it != s_.objects.end()) return it->second.name;
    if (auto it = s_.positions.find(id); it != s_.positions.end())
      return it->second.frame.label ? *it->second.frame.label
                                    : std::string(to_string(it->second.frame.kind));
    if (auto it = s_.compounds.find(id); it != s_.compounds.end()) return it->second.decl;
    return {};
  }

 private:
  const Interpreter::Compiled& c_;
  const Limits& limits_;
  InstitutionalState& s_;
  std::deque<std::size_t> queue_;
  std::size_t firings_ = 0;
};

template <class Vec, class Key>
void erase_ids(Vec& v, const Key& ids) {
  for (auto id : ids) v.erase(id);
}

}  // namespace

// ---- deltas ---------------------------------------------------------------------

bool StateDelta::empty() const {
  return clock_before == clock_after && objects_created.empty() && objects_updated.empty() &&
         objects_removed.empty() && positions_created.empty() && positions_updated.empty() &&
         positions_removed.empty() && compounds_created.empty() && compounds_updated.empty() &&
         compounds_removed.empty() && descriptor_changes.empty() && violations_raised.empty() &&
         events.empty();
}

StateDelta diff(const InstitutionalState& before, const InstitutionalState& after) {
  StateDelta d;
  d.clock_before = before.clock;
  d.clock_after = after.clock;
  d.next_id = after.next_id;
  d.next_seq = after.next_seq;

  for (const auto& [id, o] : after.objects) {
    auto it = before.objects.find(id);
    if (it == before.objects.end()) {
      d.objects_created.push_back(o);
      continue;
    }
    const ObjectInstance& old = it->second;
    ObjectInstance same_desc = o;
    same_desc.descriptors = old.descriptors;
    if (!(same_desc == old)) d.objects_updated.push_back(same_desc);
    for (const auto& [name, prov] : o.descriptors) {
      auto p = old.descriptors.find(name);
      if (p == old.descriptors.end() || !(p->second == prov))
        d.descriptor_changes.push_back(DescriptorChange{id, name, true, prov});
    }
    for (const auto& [name, prov] : old.descriptors)
      if (!o.descriptors.count(name))
        d.descriptor_changes.push_back(DescriptorChange{id, name, false, {}});
  }
  for (const auto& [id, o] : before.objects)
    if (!after.objects.count(id)) d.objects_removed.push_back(id);

  for (const auto& [id, p] : after.positions) {
    auto it = before.positions.find(id);
    if (it == before.positions.end()) {
      d.positions_created.push_back(p);
      continue;
    }
    PositionInstance flagless = p;
    flagless.violated = it->second.violated;
    if (!(flagless == it->second)) {
      d.positions_updated.push_back(p);
    } else if (p.violated && !it->second.violated) {
      d.violations_raised.push_back(id);
    } else if (!(p == it->second)) {
      d.positions_updated.push_back(p);
    }
  }
  for (const auto& [id, p] : before.positions)
    if (!after.positions.count(id)) d.positions_removed.push_back(id);

  for (const auto& [id, c] : after.compounds) {
    auto it = before.compounds.find(id);
    if (it == before.compounds.end()) {
      d.compounds_created.push_back(c);
    } else if (!(it->second == c)) {
      d.compounds_updated.push_back(c);
    }
  }
  for (const auto& [id, c] : before.compounds)
    if (!after.compounds.count(id)) d.compounds_removed.push_back(id);

  for (std::size_t i = before.event_log.size(); i < after.event_log.size(); ++i)
    d.events.push_back(after.event_log[i]);
  return d;
}

void apply_delta(InstitutionalState& s, const StateDelta& d) {
  s.clock = d.clock_after;
  s.next_id = d.next_id;
  s.next_seq = d.next_seq;
  erase_ids(s.objects, d.objects_removed);
  erase_ids(s.positions, d.positions_removed);
  erase_ids(s.compounds, d.compounds_removed);
  for (const auto& o : d.objects_created) s.objects[o.id] = o;
  for (const auto& o : d.objects_updated) {
    auto descs = s.objects[o.id].descriptors;
    s.objects[o.id] = o;
    s.objects[o.id].descriptors = std::move(descs);
  }
  for (const auto& c : d.descriptor_changes) {
    auto& descs = s.objects.at(c.object).descriptors;
    if (c.added) {
      descs[c.descriptor] = c.provenance;
    } else {
      descs.erase(c.descriptor);
    }
  }
  for (const auto& p : d.positions_created) s.positions[p.id] = p;
  for (const auto& p : d.positions_updated) s.positions[p.id] = p;
  for (InstanceId id : d.violations_raised) s.positions.at(id).violated = true;
  for (const auto& c : d.compounds_created) s.compounds[c.id] = c;
  for (const auto& c : d.compounds_updated) s.compounds[c.id] = c;
  s.event_log.insert(s.event_log.end(), d.events.begin(), d.events.end());
}

InstitutionalState Trace::replay() const {
  InstitutionalState s = initial;
  for (const TraceEntry& e : entries) apply_delta(s, e.delta);
  return s;
}

std::string EnabledAction::text() const {
  std::string out = "#" + event;
  if (refinements.empty()) return out;
  out += " { ";
  for (std::size_t i = 0; i < refinements.size(); ++i) {
    if (i) out += ", ";
    out += refinements[i].first + ": " + refinements[i].second;
  }
  return out + " }";
}

// ---- interpreter ------------------------------------------------------------------

Interpreter::Interpreter(Program program, Limits limits)
    : compiled_(std::make_shared<const Compiled>(std::move(program))), limits_(limits) {}

const Program& Interpreter::program() const { return compiled_->program; }

InstitutionalState Interpreter::init_state(Ticks at) const {
  InstitutionalState s;
  s.clock = at;
  Engine e(*compiled_, limits_, s);
  e.init();
  e.closure();
  return s;
}

namespace {

template <class F>
StepOutcome run_step(const InstitutionalState& state, F&& body) {
  StepOutcome out{state, {}};
  body(out.state);
  out.delta = diff(state, out.state);
  return out;
}

}  // namespace

InstanceId Interpreter::resolve_actor(const InstitutionalState& s, const std::string& actor) const {
  if (auto ref = split_instance_ref(actor)) {
    auto it = s.objects.find(ref->second);
    if (it != s.objects.end() && (ref->first.empty() || it->second.name == ref->first))
      return it->first;
  } else if (const ObjectInstance* o = s.find_object(actor)) {
    return o->id;
  }
  throw Error(ErrorCode::unknown_actor, "unknown actor '" + actor + "'");
}

StepOutcome Interpreter::do_action(const InstitutionalState& state, const DoAction& action) const {
  InstanceId actor = resolve_actor(state, action.actor);
  if (!is_identifier(action.event))
    throw Error(ErrorCode::invalid_step, "'" + action.event + "' is not an event name");
  bool disabled = false;
  StepOutcome out = run_step(state, [&](InstitutionalState& s) {
    Engine e(*compiled_, limits_, s);
    Bindings refinements;
    for (const auto& [k, v] : action.refinements) refinements[k] = e.resolve_refinement(v);
    std::size_t first = s.event_log.size();
    e.perform_act(actor, action.event, std::move(refinements), Provenance{}, true);
    disabled = s.event_log[first].disabled;
    e.run_cascade();
    e.settle();
  });
  out.delta.disabled = disabled;
  return out;
}

StepOutcome Interpreter::advance_clock(const InstitutionalState& state,
                                       const Duration& duration) const {
  if (duration.amount < 0)
    throw Error(ErrorCode::invalid_step, "cannot advance by a negative duration");
  Ticks ticks = duration_to_ticks(duration);
  Ticks target = checked_add(state.clock, ticks);
  return run_step(state, [&](InstitutionalState& s) {
    s.clock = target;
    Engine e(*compiled_, limits_, s);
    e.settle();
  });
}

StepOutcome Interpreter::assert_object(const InstitutionalState& state,
                                       const AssertObject& object) const {
  if (!is_identifier(object.name))
    throw Error(ErrorCode::invalid_step, "'" + object.name + "' is not a valid object name");
  if (state.find_object(object.name))
    throw Error(ErrorCode::invalid_step, "object '" + object.name + "' already exists");
  for (const auto& d : object.descriptors)
    if (!is_identifier(d))
      throw Error(ErrorCode::invalid_step, "'" + d + "' is not a valid descriptor");
  return run_step(state, [&](InstitutionalState& s) {
    InstanceId id = s.next_id++;
    ObjectInstance o{id, object.name, object.properties, {}, Origin::asserted()};
    for (const auto& d : object.descriptors) o.descriptors[d] = DescriptorProvenance{};
    s.objects[id] = std::move(o);
    Engine e(*compiled_, limits_, s);
    e.settle();
  });
}

StepOutcome Interpreter::produce(const InstitutionalState& state, const Produce& production) const {
  const std::string& target = production.target;
  auto ref = split_instance_ref(target);
  std::optional<Term> term;
  if (ref) {
    if (production.polarity == Polarity::create)
      throw Error(ErrorCode::invalid_step, "cannot create an existing instance '" + target + "'");
  } else {
    TermParseResult parsed = parse_term(target, "<produce>");
    if (!parsed.term || has_errors(parsed.diagnostics))
      throw Error(ErrorCode::invalid_step, "cannot parse production target '" + target +
                                               "': " + format_diagnostics(parsed.diagnostics));
    term = std::move(parsed.term);
  }
  return run_step(state, [&](InstitutionalState& s) {
    Engine e(*compiled_, limits_, s);
    if (ref) {
      std::string label = e.instance_label(ref->second);
      if (label.empty() || (!ref->first.empty() && label != ref->first))
        throw Error(ErrorCode::missing_target, "no instance '" + target + "'");
      e.remove_instance(ref->second, target);
    } else {
      Term effect = dpcl::produce(production.polarity, *term);
      e.apply_effect(effect, Scope{s.globals, nullptr, std::nullopt},
                     Cause{Provenance{}, std::nullopt});
    }
    e.run_cascade();
    e.settle();
  });
}

StepOutcome Interpreter::apply(const InstitutionalState& state, const Step& step) const {
  return std::visit(
      [&](const auto& s) -> StepOutcome {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, DoAction>) return do_action(state, s);
        else if constexpr (std::is_same_v<T, Advance>) return advance_clock(state, s.duration);
        else if constexpr (std::is_same_v<T, AssertObject>) return assert_object(state, s);
        else return produce(state, s);
      },
      step);
}

InstitutionalState Interpreter::recompute_closure(const InstitutionalState& state) const {
  InstitutionalState s = state;
  Engine e(*compiled_, limits_, s);
  e.closure();
  return s;
}

Trace Interpreter::run(const Scenario& scenario, Ticks start) const {
  Trace trace;
  trace.initial = init_state(start);
  InstitutionalState s = trace.initial;
  for (std::size_t i = 0; i < scenario.steps.size(); ++i) {
    try {
      StepOutcome out = apply(s, scenario.steps[i]);
      s = std::move(out.state);
      trace.entries.push_back(TraceEntry{scenario.steps[i], std::move(out.delta), s.clock});
    } catch (const Error& e) {
      trace.failure = StepFailure{i, e.code(), e.what()};
      break;
    }
  }
  trace.final_state = std::move(s);
  return trace;
}

std::vector<PositionInstance> Interpreter::query_positions(const InstitutionalState& state,
                                                           const PositionFilter& filter) const {
  std::optional<InstanceId> holder;
  if (filter.holder) {
    try {
      holder = resolve_actor(state, *filter.holder);
    } catch (const Error&) {
      return {};
    }
  }
  InstitutionalState scratch = state;
  Engine e(*compiled_, limits_, scratch);
  std::vector<PositionInstance> out;
  for (const auto& [id, p] : state.positions) {
    if (filter.kind && p.category() != *filter.kind) continue;
    if (filter.violated && p.violated != *filter.violated) continue;
    if (filter.action) {
      const Term* a = p.frame.field("action");
      const auto* ev = a ? a->as<EventRef>() : nullptr;
      if (!ev || ev->name != *filter.action) continue;
    }
    if (holder) {
      const Term* h = p.frame.field("holder");
      if (!h || !e.holder_matches(*h, Scope{p.env, nullptr, std::nullopt}, *holder)) continue;
    }
    out.push_back(p);
  }
  return out;
}

namespace {

std::vector<std::pair<std::string, std::string>> render_pattern(const Engine& e,
                                                                const InstitutionalState& s,
                                                                const Fields& fields,
                                                                const Scope& sc) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const Field& f : fields) {
    std::string text;
    if (const auto* a = f.value.as<Atom>(); a && !e.is_bound(a->name, sc)) {
      text = a->name;
    } else {
      try {
        text = render_value(s, e.eval(f.value, sc));
      } catch (const Error&) {
        text = to_source(f.value, true);
      }
    }
    out.emplace_back(f.name, std::move(text));
  }
  return out;
}

}  // namespace

std::vector<EnabledAction> Interpreter::enabled_actions(const InstitutionalState& state,
                                                        const std::string& actor) const {
  InstanceId id = resolve_actor(state, actor);
  InstitutionalState scratch = state;
  Engine e(*compiled_, limits_, scratch);
  std::vector<EnabledAction> out;
  for (const auto& [pid, p] : state.positions) {
    if (p.category() != PositionCategory::power) continue;
    const Term* h = p.frame.field("holder");
    const Term* a = p.frame.field("action");
    const auto* ev = a ? a->as<EventRef>() : nullptr;
    if (!h || !ev || !e.holder_matches(*h, Scope{p.env, nullptr, std::nullopt}, id)) continue;
    Scope sc{p.env, &p.frame, id};
    out.push_back(EnabledAction{pid, ev->name, render_pattern(e, scratch, ev->refinements, sc)});
  }
  return out;
}

PositionView Interpreter::view(const InstitutionalState& state,
                               const PositionInstance& p) const {
  InstitutionalState scratch = state;
  Engine e(*compiled_, limits_, scratch);
  Scope sc{p.env, nullptr, std::nullopt};
  auto party = [&](const char* name) -> std::string {
    const Term* t = p.frame.field(name);
    if (!t) return {};
    if (t->is<Alternation>()) return to_source(*t, true);
    try {
      return render_value(scratch, e.eval(*t, sc));
    } catch (const Error&) {
      return to_source(*t, true);
    }
  };
  PositionView v;
  v.holder = party("holder");
  v.counterparty = party("counterparty");
  if (const Term* a = p.frame.field("action")) {
    if (const auto* ev = a->as<EventRef>()) {
      EnabledAction shown{p.id, ev->name,
                          render_pattern(e, scratch, ev->refinements, Scope{p.env, &p.frame, {}})};
      v.action = shown.text();
    } else {
      v.action = to_source(*a, true);
    }
  }
  if (const Term* c = p.frame.field("consequence")) v.consequence = to_source(*c, true);
  if (const Term* c = p.frame.field("violation")) v.violation = to_source(*c, true);
  return v;
}

std::string Interpreter::render(const InstitutionalState& state,
                                const CompoundInstance& compound) const {
  std::string out = compound.decl + "(";
  const CompoundDecl* decl = compiled_->compound(compound.decl);
  bool first = true;
  auto add = [&](const Value& v) {
    if (!first) out += ", ";
    first = false;
    out += render_value(state, v);
  };
  if (decl) {
    for (const auto& p : decl->params)
      if (auto it = compound.params.find(p); it != compound.params.end()) add(it->second);
  } else {
    for (const auto& [k, v] : compound.params) add(v);
  }
  return out + ")";
}

std::string_view step_kind(const Step& step) {
  switch (step.index()) {
    case 0: return "do";
    case 1: return "advance";
    case 2: return "assert";
    default: return "produce";
  }
}

std::string describe_step(const Step& step) {
  if (const auto* d = std::get_if<DoAction>(&step)) {
    std::string out = d->actor + " #" + d->event;
    if (!d->refinements.empty()) {
      out += " {";
      bool first = true;
      for (const auto& [k, v] : d->refinements) {
        out += first ? " " : ", ";
        first = false;
        InstitutionalState empty;
        out += k + ": " + render_value(empty, v);
      }
      out += " }";
    }
    return out;
  }
  if (const auto* a = std::get_if<Advance>(&step)) return "advance " + to_string(a->duration);
  if (const auto* a = std::get_if<AssertObject>(&step)) {
    std::string out = "assert " + a->name;
    for (const auto& d : a->descriptors) out += " " + d;
    return out;
  }
  const auto& p = std::get<Produce>(step);
  return (p.polarity == Polarity::create ? "+" : "-") + p.target;
}

}  // namespace dpcl
