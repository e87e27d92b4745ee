#include "properties.hpp"

#include <map>
#include <random>
#include <set>
#include <sstream>

#include "ast_generator.hpp"
#include "dpcl/printer.hpp"
#include "dpcl/rewriter.hpp"
#include "dpcl/serialize.hpp"
#include "dpcl/session.hpp"
#include "test_support.hpp"

namespace dpcl::testing {

namespace {

// Rules whose derived facts have a simple independent description.
constexpr const char* kClosureProgram = R"(
raining -> wet_streets
wet_streets -> slippery
vip(who) { who.level > 2 -> who in gold }
borrowing(lender, borrower, item, timeout) {
    duty d1 {
        holder: borrower
        counterparty: lender
        action: #return { item: book }
    }
    now() > timeout -> power {
        holder: d1.counterparty
        action: #declare_violation { target: d1 }
        consequence: +d1.violation
    }
}
)";

class Gen {
 public:
  explicit Gen(std::uint32_t seed) : rng_(seed) {}

  int pick(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  bool chance(int percent) { return pick(1, 100) <= percent; }
  template <typename T>
  const T& one_of(const std::vector<T>& v) { return v[pick(0, static_cast<int>(v.size()) - 1)]; }

  Duration duration() {
    static const std::vector<Duration> ds = {{0, DurationUnit::s}, {1, DurationUnit::s},
                                             {1, DurationUnit::h}, {1, DurationUnit::d},
                                             {10, DurationUnit::d}, {1, DurationUnit::m},
                                             {29, DurationUnit::d}};
    return one_of(ds);
  }

  /// Library scenario: actors, then a random mix of acts and clock advances.
  Scenario library(bool declare = false) {
    Scenario sc;
    std::vector<std::string> alice_desc = {"student"};
    if (chance(20)) alice_desc = {"staff"};
    sc.steps.push_back(AssertObject{"alice", alice_desc, {{"id_card", Symbol{"c1"}}}});
    std::vector<std::string> bob_desc;
    if (chance(50)) bob_desc.push_back(chance(50) ? "student" : "staff");
    sc.steps.push_back(AssertObject{"bob", bob_desc, {{"id_card", Symbol{"c2"}}}});
    sc.steps.push_back(AssertObject{"library", {}, {}});
    int n = pick(4, 24);
    for (int i = 0; i < n; ++i) {
      std::string who = chance(70) ? "alice" : "bob";
      int k = pick(0, declare ? 8 : 7);
      switch (k) {
        case 0:
          sc.steps.push_back(DoAction{who, "register", {{"instrument", Symbol{chance(80) ? (who == "alice" ? "c1" : "c2") : "c9"}}}});
          break;
        case 1:
          sc.steps.push_back(DoAction{who, "borrow", {{"item", Symbol{chance(50) ? "book1" : "book2"}}}});
          break;
        case 2:
          sc.steps.push_back(DoAction{who, "return", {{"item", Symbol{chance(50) ? "book1" : "book2"}}}});
          break;
        case 3: sc.steps.push_back(DoAction{"library", "request_return", {}}); break;
        case 4: sc.steps.push_back(DoAction{"library", "fine", {}}); break;
        case 5:
        case 6: sc.steps.push_back(Advance{duration()}); break;
        case 7:
          if (chance(10)) sc.steps.push_back(DoAction{"ghost", "borrow", {}});
          else sc.steps.push_back(Advance{duration()});
          break;
        default:
          sc.steps.push_back(DoAction{"library", "declare_violation", {{"target", Symbol{"d1"}}}});
      }
    }
    return sc;
  }

  /// Next step for the closure program, chosen against the current state.
  std::optional<Step> closure_step(const InstitutionalState& s) {
    switch (pick(0, 7)) {
      case 0: return Produce{Polarity::create, "raining"};
      case 1:
        if (s.find_object("raining")) return Produce{Polarity::remove, "raining"};
        return std::nullopt;
      case 2: return Produce{Polarity::create, "vip(alice)"};
      case 3:
      case 4: {
        std::vector<std::string> live;
        for (const auto& [id, c] : s.compounds) live.push_back(c.decl + "#" + std::to_string(id));
        if (live.empty()) return std::nullopt;
        return Produce{Polarity::remove, one_of(live)};
      }
      case 5:
        return Produce{Polarity::create, "borrowing { lender: library borrower: alice item: book1 timeout: " +
                                             std::to_string(s.clock + pick(0, 3) * 86400) + " }"};
      case 6: return Advance{duration()};
      default: return DoAction{"library", "declare_violation", {{"target", Symbol{"d1"}}}};
    }
  }

  /// A well-formed program with labelled and unlabelled duties, some with
  /// violation conditions, at top level and inside compounds.
  std::string valid_program() {
    std::ostringstream out;
    int label = 0;
    auto duty = [&](bool in_compound, std::vector<std::string>& violable) {
      bool labelled = chance(80);
      std::string name = "d" + std::to_string(label++);
      out << "duty" << (labelled ? " " + name : "") << " {\n"
          << "    holder: " << (in_compound ? "a" : "tenant") << "\n"
          << "    counterparty: " << (in_compound ? "b" : "landlord") << "\n"
          << "    action: #act" << label << (chance(50) ? " { item: x }" : "") << "\n";
      if (chance(60)) {
        out << "    violation: now() > " << (in_compound && chance(50) ? "due" : std::to_string(pick(1, 40)) + "d")
            << "\n";
        if (labelled) violable.push_back(name);
      }
      out << "}\n";
    };
    int top = pick(0, 3);
    for (int i = 0; i < top; ++i) {
      std::vector<std::string> v;
      duty(false, v);
    }
    int compounds = pick(0, 2);
    for (int c = 0; c < compounds; ++c) {
      std::string cname = "contract" + std::to_string(c);
      out << cname << "(a, b, due) {\n";
      std::vector<std::string> violable;
      int duties = pick(1, 3);
      for (int i = 0; i < duties; ++i) duty(true, violable);
      for (const auto& d : violable)
        if (chance(60))
          out << "+" << d << ".violation => +power {\n    holder: b\n    action: #terminate\n    consequence: -"
              << cname << "\n}\n";
      out << "}\n";
    }
    if (chance(50)) out << "power {\n    holder: tenant\n    action: #sign\n    consequence: tenant in signed\n}\n";
    return out.str();
  }

 private:
  std::mt19937 rng_;
};

Program program_of(const std::string& source) { return load_program(source); }

const Program& library_program() {
  static const Program p = load_corpus("library.dpcl");
  return p;
}

const Interpreter& library() {
  static const Interpreter in(library_program());
  return in;
}

const Interpreter& rewritten_library() {
  static const Interpreter in(apply_all(library_program(), kViolationToPower).program);
  return in;
}

const Interpreter& closure_interp() {
  static const Interpreter in(program_of(kClosureProgram));
  return in;
}

/// States before each entry, followed by the final state.
std::vector<InstitutionalState> states_of(const Trace& t) {
  std::vector<InstitutionalState> out{t.initial};
  InstitutionalState s = t.initial;
  for (const auto& e : t.entries) {
    apply_delta(s, e.delta);
    out.push_back(s);
  }
  return out;
}

/// Applies closure-program steps adaptively; failing steps are skipped.
std::vector<InstitutionalState> closure_walk(std::uint32_t seed) {
  Gen g(seed * 7919u);
  const Interpreter& in = closure_interp();
  InstitutionalState s = in.init_state(0);
  s = in.assert_object(s, AssertObject{"alice", {}, {{"level", std::int64_t{g.pick(0, 5)}}}}).state;
  s = in.assert_object(s, AssertObject{"library", {}, {}}).state;
  std::vector<InstitutionalState> out{s};
  int n = g.pick(5, 25);
  for (int i = 0; i < n; ++i) {
    auto step = g.closure_step(s);
    if (!step) continue;
    try {
      s = in.apply(s, *step).state;
      out.push_back(s);
    } catch (const Error&) {
    }
  }
  return out;
}

std::string describe(const std::string& what, std::size_t index) {
  return what + " at state " + std::to_string(index);
}

// ---- properties ----------------------------------------------------------------------

std::string closure_idempotence(std::uint32_t seed) {
  auto walk = closure_walk(seed);
  for (std::size_t i = 0; i < walk.size(); ++i)
    if (closure_interp().recompute_closure(walk[i]) != walk[i]) return describe("closure moved", i);
  Trace t = library().run(Gen(seed).library());
  auto states = states_of(t);
  for (std::size_t i = 0; i < states.size(); ++i)
    if (library().recompute_closure(states[i]) != states[i]) return describe("library closure moved", i);
  return {};
}

std::string derived_support(std::uint32_t seed) {
  auto walk = closure_walk(seed);
  for (std::size_t i = 0; i < walk.size(); ++i) {
    const InstitutionalState& s = walk[i];
    bool raining = s.find_object("raining") != nullptr;
    bool wet = s.find_object("wet_streets") != nullptr;
    bool slippery = s.find_object("slippery") != nullptr;
    if (wet != raining) return describe("wet_streets unsupported or missing", i);
    if (slippery != wet) return describe("slippery unsupported or missing", i);

    const ObjectInstance* alice = s.find_object("alice");
    std::int64_t level = std::get<std::int64_t>(alice->properties.at("level"));
    bool vip = false;
    std::size_t overdue = 0;
    for (const auto& [id, c] : s.compounds) {
      if (c.decl == "vip" && c.params.at("who") == Value{ObjectRef{alice->id}}) vip = true;
      if (c.decl == "borrowing" && s.clock > std::get<std::int64_t>(c.params.at("timeout"))) ++overdue;
    }
    if (alice->has_descriptor("gold") != (vip && level > 2)) return describe("gold unsupported or missing", i);

    std::size_t derived_objects = 0, derived_positions = 0, derived_descriptors = 0;
    for (const auto& [id, o] : s.objects) {
      derived_objects += o.origin.kind == Origin::Kind::derived;
      for (const auto& [d, p] : o.descriptors) derived_descriptors += p.derived;
    }
    for (const auto& [id, p] : s.positions) {
      if (p.origin.kind != Origin::Kind::derived) continue;
      ++derived_positions;
      if (!s.compounds.count(p.origin.scope)) return describe("derived power outlived its compound", i);
    }
    if (derived_objects != static_cast<std::size_t>(wet) + slippery) return describe("stray derived object", i);
    if (derived_descriptors != static_cast<std::size_t>(vip && level > 2)) return describe("stray descriptor", i);
    if (derived_positions != overdue) return describe("declare powers != overdue borrowings", i);
  }
  return {};
}

std::string determinism(std::uint32_t seed) {
  Scenario sc = Gen(seed).library(seed % 2 == 0);
  const Interpreter& base = seed % 2 == 0 ? rewritten_library() : library();
  Interpreter fresh(base.program());
  std::string a = dump(trace_to_json(base.run(sc), &base));
  std::string b = dump(trace_to_json(fresh.run(sc), &fresh));
  return a == b ? std::string{} : "traces differ";
}

std::string replay(std::uint32_t seed) {
  Trace t = library().run(Gen(seed).library());
  if (t.replay() != t.final_state) return "replay differs from final state";
  Trace back = trace_from_json(parse_json(dump(trace_to_json(t, &library()))));
  if (back.replay() != t.final_state) return "replay of the stored trace differs";
  return {};
}

std::string clock_monotonicity(std::uint32_t seed) {
  Scenario sc = Gen(seed).library();
  Trace t = library().run(sc);
  Ticks clock = t.initial.clock;
  for (std::size_t i = 0; i < t.entries.size(); ++i) {
    const auto& e = t.entries[i];
    if (e.delta.clock_before != clock || e.delta.clock_after < clock) return describe("clock went back", i);
    if (const auto* adv = std::get_if<Advance>(&e.step))
      if (e.delta.clock_after - clock != duration_to_ticks(adv->duration)) return describe("advance mismatch", i);
    if (!std::holds_alternative<Advance>(e.step) && e.delta.clock_after != clock)
      return describe("non-advance step moved the clock", i);
    clock = e.delta.clock_after;
  }
  Seq seq = 0;
  Ticks at = 0;
  for (const auto& ev : t.final_state.event_log) {
    if (ev.seq <= seq || ev.at < at) return "event log out of order";
    seq = ev.seq;
    at = ev.at;
  }
  return {};
}

std::string edge_triggered(std::uint32_t seed) {
  Trace t = library().run(Gen(seed).library());
  std::map<InstanceId, int> raised;
  for (const auto& ev : t.final_state.event_log)
    if (ev.flag == "violation" && ev.target) ++raised[*ev.target];
  for (const auto& [id, n] : raised)
    if (n > 1) return "duty #" + std::to_string(id) + " violated " + std::to_string(n) + " times";
  for (const auto& [id, p] : t.final_state.positions)
    if (p.violated != (raised.count(id) > 0)) return "violated flag disagrees with the log for #" + std::to_string(id);
  return {};
}

std::string discharge_precedence(std::uint32_t seed) {
  Scenario sc = Gen(seed).library();
  Trace t = library().run(sc);
  auto states = states_of(t);
  for (std::size_t i = 0; i < t.entries.size(); ++i) {
    const auto* act = std::get_if<DoAction>(&t.entries[i].step);
    if (!act || act->event != "return") continue;
    const InstitutionalState& before = states[i];
    const InstitutionalState& after = states[i + 1];
    InstanceId actor = before.find_object(act->actor)->id;
    for (const auto& [id, p] : before.positions) {
      if (p.frame.kind != FrameKind::duty || !p.frame.label || *p.frame.label != "d1") continue;
      const CompoundInstance& c = before.compounds.at(p.origin.compound);
      if (c.params.at("borrower") != Value{ObjectRef{actor}}) continue;
      bool still = after.positions.count(id) > 0;
      if (!p.violated && still) return describe("performed duty not discharged", i);
      if (p.violated && !still) return describe("violated duty discharged", i);
    }
    for (const auto& ev : t.entries[i].delta.events)
      if (ev.flag == "violation") return describe("violation raised by a performance", i);
  }
  return {};
}

std::string no_power_no_change(std::uint32_t seed) {
  Trace t = library().run(Gen(seed).library());
  auto states = states_of(t);
  for (std::size_t i = 0; i < t.entries.size(); ++i) {
    const auto& d = t.entries[i].delta;
    if (!d.disabled) continue;
    const auto &a = states[i], &b = states[i + 1];
    // Acts that perform a live duty are out of scope: discharge is a change.
    const auto& act = std::get<DoAction>(t.entries[i].step);
    bool performs_duty = false;
    for (const auto& [id, p] : a.positions) {
      if (p.frame.kind != FrameKind::duty || p.violated) continue;
      PositionView v = library().view(a, p);
      std::string prefix = "#" + act.event;
      if (v.holder == act.actor && v.action.rfind(prefix, 0) == 0 &&
          (v.action.size() == prefix.size() || v.action[prefix.size()] == ' '))
        performs_duty = true;
    }
    if (performs_duty) continue;
    if (a.objects != b.objects || a.positions != b.positions || a.compounds != b.compounds ||
        a.clock != b.clock || a.next_id != b.next_id)
      return describe("disabled act changed the state", i);
    if (b.event_log.size() != a.event_log.size() + 1) return describe("disabled act logged more than itself", i);
  }
  return {};
}

std::string serialization_round_trip(std::uint32_t seed) {
  Trace t = library().run(Gen(seed).library(false));
  auto states = states_of(t);
  for (std::size_t i = 0; i < states.size(); ++i) {
    std::string text = dump(state_to_json(states[i], &library()));
    InstitutionalState back = state_from_json(parse_json(text));
    if (back != states[i]) return describe("state changed in round trip", i);
    if (dump(state_to_json(back, &library())) != text) return describe("state text unstable", i);
  }
  for (std::size_t i = 0; i < t.entries.size(); ++i)
    if (delta_from_json(parse_json(dump(delta_to_json(t.entries[i].delta)))) != t.entries[i].delta)
      return describe("delta changed in round trip", i);
  return {};
}

std::string rewrite_idempotence(std::uint32_t seed) {
  Gen g(seed);
  std::string source = g.valid_program();
  auto parsed = parse_and_validate(source);
  if (!parsed.program) return "generator produced an invalid program:\n" + source + format_diagnostics(parsed.diagnostics);
  RewriteResult once = apply_all(*parsed.program, kViolationToPower);
  if (once.sites != list_applicable(*parsed.program, kViolationToPower)) return "sites differ from list_applicable";
  if (has_errors(validate(once.program))) return "rewritten program does not validate:\n" + pretty_print(once.program);
  if (!list_applicable(once.program, kViolationToPower).empty()) return "sites left after rewriting";
  RewriteResult twice = apply_all(once.program, kViolationToPower);
  if (!twice.sites.empty() || twice.program != once.program) return "second application changed the program";
  auto reparsed = parse_and_validate(pretty_print(once.program));
  if (!reparsed.program || *reparsed.program != once.program) return "rewritten program does not round-trip";

  // Arbitrary (not necessarily valid) programs: still idempotent.
  Program arbitrary = AstGenerator(seed).program();
  RewriteResult a1 = apply_all(arbitrary, kViolationToPower);
  if (apply_all(a1.program, kViolationToPower).program != a1.program) return "not idempotent on a generated AST";
  return {};
}

std::string fork_isolation(std::uint32_t seed) {
  Gen g(seed);
  Scenario prefix = g.library(), left = g.library(), right = g.library();
  left.steps.erase(left.steps.begin(), left.steps.begin() + 3);
  right.steps.erase(right.steps.begin(), right.steps.begin() + 3);

  SessionStore store;
  auto added = store.add_program(read_corpus("library.dpcl"));
  std::string parent = store.create_session(added.program->id).id;
  auto feed = [&](const std::string& id, const Scenario& sc) {
    for (const Step& s : sc.steps) try {
        store.step(id, s);
      } catch (const Error&) {
      }
  };
  auto oracle = [&](InstitutionalState s, const std::vector<const Scenario*>& parts) {
    for (const Scenario* sc : parts)
      for (const Step& step : sc->steps) try {
          s = library().apply(s, step).state;
        } catch (const Error&) {
        }
    return s;
  };

  feed(parent, prefix);
  std::string child = store.fork_session(parent).id;
  // Interleave the two branches step by step.
  std::size_t n = std::max(left.steps.size(), right.steps.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (i < left.steps.size()) feed(parent, Scenario{{left.steps[i]}});
    if (i < right.steps.size()) feed(child, Scenario{{right.steps[i]}});
  }
  InstitutionalState init = library().init_state(0);
  if (store.session(parent).state != oracle(init, {&prefix, &left})) return "parent diverged";
  if (store.session(child).state != oracle(init, {&prefix, &right})) return "child diverged";
  return {};
}

}  // namespace

const std::vector<Property>& properties() {
  static const std::vector<Property> all = {
      {"closure idempotence", closure_idempotence},
      {"derived-fact support", derived_support},
      {"trace determinism", determinism},
      {"trace replay", replay},
      {"clock monotonicity", clock_monotonicity},
      {"edge-triggered violations", edge_triggered},
      {"discharge precedence", discharge_precedence},
      {"disabled acts change nothing", no_power_no_change},
      {"serialization round trip", serialization_round_trip},
      {"rewrite idempotence and revalidation", rewrite_idempotence},
      {"fork isolation", fork_isolation},
  };
  return all;
}

std::string run_property(const Property& p, std::uint32_t cases) {
  for (std::uint32_t seed = 1; seed <= cases; ++seed) {
    std::string failure;
    try {
      failure = p.check(seed);
    } catch (const std::exception& e) {
      failure = std::string("exception: ") + e.what();
    }
    if (!failure.empty()) return "seed " + std::to_string(seed) + ": " + failure;
  }
  return {};
}

}  // namespace dpcl::testing
