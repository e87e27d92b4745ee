// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero when any fails.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <set>

#include "dpcl/printer.hpp"
#include "dpcl/rewriter.hpp"
#include "dpcl/serialize.hpp"
#include "http_test_support.hpp"
#include "properties.hpp"
#include "test_support.hpp"

namespace dpcl::acceptance {

namespace fs = std::filesystem;
using testing::load_corpus;
using testing::read_corpus;

using Failures = std::vector<std::string>;

#define REQUIRE(cond, msg)            \
  do {                                \
    if (!(cond)) failures.push_back(msg); \
  } while (0)

Scenario scenario(const std::string& name) {
  return scenario_from_json(parse_json(read_corpus("scenarios/" + name)));
}

std::size_t count_events(const InstitutionalState& s, const std::string& text) {
  std::size_t n = 0;
  for (const auto& ev : s.event_log) n += render_event(s, ev) == text;
  return n;
}

std::vector<PositionInstance> powers_for(const Interpreter& in, const InstitutionalState& s,
                                         const std::string& action) {
  return in.query_positions(s, {PositionCategory::power, {}, action, {}});
}

std::vector<InstitutionalState> states_of(const Trace& t) {
  std::vector<InstitutionalState> out{t.initial};
  InstitutionalState s = t.initial;
  for (const auto& e : t.entries) {
    apply_delta(s, e.delta);
    out.push_back(s);
  }
  return out;
}

// ---- criteria ----------------------------------------------------------------------------

Failures corpus_fidelity() {
  Failures failures;
  Program library = load_corpus("library.dpcl");
  std::size_t powers = 0, compounds = 0;
  bool fine_declared = false;
  for (const auto& d : library.declarations) {
    if (const auto* f = std::get_if<Frame>(&d)) powers += f->kind == FrameKind::power;
    if (const auto* c = std::get_if<CompoundDecl>(&d)) {
      ++compounds;
      if (c->name == "fine" && c->params == std::vector<std::string>{"borrower", "lender"}) fine_declared = true;
    }
  }
  REQUIRE(powers == 2 && compounds == 2, "library corpus lacks the register/borrow powers or the borrowing compound");
  REQUIRE(fine_declared, "fine(borrower, lender) is not declared");
  for (const char* file : {"library.dpcl", "library_rewritten.dpcl", "weather.dpcl", "positions.dpcl",
                           "two_duties.dpcl"}) {
    auto first = parse_and_validate(read_corpus(file), file);
    if (!first.program || has_errors(first.diagnostics)) {
      failures.push_back(std::string(file) + " does not parse cleanly");
      continue;
    }
    auto again = parse(pretty_print(*first.program));
    REQUIRE(again.program && *again.program == *first.program, std::string(file) + " does not round-trip");
  }
  return failures;
}

Failures canonical_scenario() {
  Failures failures;
  Interpreter in(load_corpus("library.dpcl"));
  Scenario sc = scenario("canonical.json");
  InstitutionalState s = in.init_state(0);
  std::vector<InstitutionalState> after;
  for (const Step& step : sc.steps) {
    s = in.apply(s, step).state;
    after.push_back(s);
  }
  const auto& registered = after[2];
  REQUIRE(registered.find_object("alice")->has_descriptor("member"), "alice is not a member after #register");

  const auto& borrowed = after[3];
  std::vector<const CompoundInstance*> borrowings;
  for (const auto& [id, c] : borrowed.compounds)
    if (c.decl == "borrowing") borrowings.push_back(&c);
  REQUIRE(borrowings.size() == 1, "expected exactly one borrowing");
  if (borrowings.size() == 1) {
    const CompoundInstance& b = *borrowings[0];
    REQUIRE(b.params.at("timeout") == Value{std::int64_t{2'592'000}}, "timeout is not 2592000");
    std::set<std::string> members;
    for (InstanceId m : b.members) {
      const PositionInstance& p = borrowed.positions.at(m);
      members.insert(in.view(borrowed, p).action + (p.frame.label ? "/" + *p.frame.label : ""));
    }
    REQUIRE(members == (std::set<std::string>{"#request_return", "#return { item: book }/d1"}),
            "borrowing does not hold request_return and d1");
  }

  REQUIRE(count_events(after[4], "+d1.violation") == 0, "violation raised at exactly the timeout");
  REQUIRE(count_events(after[5], "+d1.violation") == 1, "expected exactly one +d1.violation");
  auto fines = powers_for(in, after[5], "fine");
  REQUIRE(fines.size() == 1 && in.view(after[5], fines[0]).holder == "library", "library does not hold #fine");

  std::size_t fine_instances = 0;
  for (const auto& [id, c] : after[6].compounds)
    if (in.render(after[6], c) == "fine(alice, library)") ++fine_instances;
  REQUIRE(fine_instances == 1, "fine(alice, library) does not exist after #fine");
  REQUIRE(count_events(after[6], "+d1.violation") == 1, "violation raised more than once");
  return failures;
}

Failures discharge_path() {
  Failures failures;
  Interpreter in(load_corpus("library.dpcl"));
  Trace t = in.run(scenario("discharge.json"));
  REQUIRE(!t.failure, "discharge scenario failed");
  auto states = states_of(t);
  bool had_d1 = false;
  for (const auto& s : states) {
    for (const auto& [id, p] : s.positions) {
      if (p.frame.label == std::optional<std::string>("d1")) had_d1 = true;
      REQUIRE(!p.violated, "a position was violated");
    }
    REQUIRE(powers_for(in, s, "fine").empty(), "a fine power existed");
  }
  REQUIRE(had_d1, "d1 never existed");
  for (const auto& [id, p] : t.final_state.positions)
    REQUIRE(p.frame.label != std::optional<std::string>("d1"), "d1 was not removed");
  REQUIRE(count_events(t.final_state, "+d1.violation") == 0, "violation event logged");
  return failures;
}

Failures request_return_path() {
  Failures failures;
  Interpreter in(load_corpus("library.dpcl"));
  Scenario sc = scenario("canonical.json");
  sc.steps.resize(4);
  sc.steps.push_back(DoAction{"library", "request_return", {}});
  Trace t = in.run(sc);
  REQUIRE(!t.failure, "request_return scenario failed");
  auto before = in.query_positions(states_of(t)[4], {PositionCategory::duty, {}, {}, {}});
  auto after = in.query_positions(t.final_state, {PositionCategory::duty, {}, {}, {}});
  REQUIRE(after.size() == before.size() + 1, "no new duty created");
  bool found = false;
  for (const auto& p : after) {
    if (p.frame.label) continue;
    PositionView v = in.view(t.final_state, p);
    found = found || (v.holder == "alice" && v.counterparty == "library" && v.action == "#return { item: book }");
  }
  REQUIRE(found, "the new duty is not alice's duty to return to library");
  return failures;
}

Failures rewrite_equivalence() {
  Failures failures;
  RewriteResult r = apply_all(load_corpus("library.dpcl"), kViolationToPower);
  REQUIRE(r.program == load_corpus("library_rewritten.dpcl"), "rewrite differs from library_rewritten.dpcl");
  REQUIRE(pretty_print(r.program).find("#declare_violation { target: d1 }") != std::string::npos,
          "output lacks #declare_violation { target: d1 }");

  Interpreter original(load_corpus("library.dpcl"));
  Interpreter rewritten(r.program);
  Trace a = original.run(scenario("canonical.json"));
  Trace b = rewritten.run(scenario("declare.json"));
  REQUIRE(!a.failure && !b.failure, "a scenario failed");
  auto violated = [](const Interpreter& in, const InstitutionalState& s) {
    std::multiset<std::string> out;
    for (const auto& [id, p] : s.positions)
      if (p.violated) out.insert(*p.frame.label + "@" + in.render(s, s.compounds.at(p.origin.compound)));
    return out;
  };
  auto fine_powers = [](const Interpreter& in, const InstitutionalState& s) {
    std::multiset<std::string> out;
    for (const auto& p : powers_for(in, s, "fine")) out.insert(in.view(s, p).holder);
    return out;
  };
  auto fines = [](const Interpreter& in, const InstitutionalState& s) {
    std::multiset<std::string> out;
    for (const auto& [id, c] : s.compounds)
      if (c.decl == "fine") out.insert(in.render(s, c));
    return out;
  };
  // Compare just after the violation, then at the end.
  auto sa = states_of(a), sb = states_of(b);
  REQUIRE(violated(original, sa[6]) == violated(rewritten, sb[7]), "violated duties differ after declaring");
  REQUIRE(fine_powers(original, sa[6]) == fine_powers(rewritten, sb[7]), "fine powers differ after declaring");
  REQUIRE(violated(original, a.final_state) == violated(rewritten, b.final_state), "final violated duties differ");
  REQUIRE(fines(original, a.final_state) == fines(rewritten, b.final_state), "fine instances differ");

  Trace quiet = rewritten.run(scenario("canonical.json"));
  std::size_t raised = 0;
  for (const auto& ev : quiet.final_state.event_log) raised += ev.flag == "violation";
  REQUIRE(raised == 0, "the rewritten program raised a violation without a declaration");
  return failures;
}

Failures property_suites() {
  Failures failures;
  for (const auto& p : testing::properties()) {
    std::string failure = testing::run_property(p);
    if (!failure.empty()) failures.push_back(p.name + ": " + failure);
  }
  return failures;
}

Failures service_contract() {
  Failures failures;
  fs::path tmp = fs::temp_directory_path() / ("dpcl-acceptance-" + std::to_string(std::random_device{}()));
  fs::create_directories(tmp);

  Json over_http;
  std::string sid;
  SessionStore store;
  {
    testing::LiveServer server(store);
    auto c = server.client();
    auto prog = c.Post("/programs", read_corpus("library.dpcl"), "text/plain");
    REQUIRE(prog && prog->status == 201, "POST /programs failed");
    if (!failures.empty()) return failures;
    auto sess = testing::post(c, "/sessions", {{"program_id", Json::parse(prog->body)["program_id"]}});
    sid = sess.body["session_id"];
    Json steps = parse_json(read_corpus("scenarios/canonical.json"))["steps"];
    REQUIRE(steps.size() == 7, "canonical scenario file has the wrong length");
    for (const auto& step : steps) {
      auto r = c.Post("/sessions/" + sid + "/steps", step.dump(), "application/json");
      REQUIRE(r && r->status == 200, "step " + step.dump() + " failed over HTTP");
    }
    over_http = testing::get(c, "/sessions/" + sid + "/state").body;
  }

  std::string command = std::string("\"") + DPCL_CLI_PATH + "\" run \"" + testing::corpus_path("library.dpcl") +
                        "\" --scenario \"" + testing::corpus_path("scenarios/canonical.json") + "\" --trace \"" +
                        (tmp / "trace.json").string() + "\" > /dev/null";
  REQUIRE(std::system(command.c_str()) == 0, "dpcl run failed");
  if (fs::exists(tmp / "trace.json")) {
    Json trace = parse_json(read_text_file(tmp / "trace.json"));
    Json final_state = trace["final"];
    REQUIRE(final_state == over_http, "HTTP snapshot differs from dpcl run: " + Json::diff(final_state, over_http).dump());
  }

  // Save/load round trips, fresh and after the violation.
  Session fresh = store.create_session(store.session(sid).program->id);
  for (const std::string& id : {fresh.id, sid}) {
    fs::path file = tmp / (id + ".json");
    store.save_session(id, file);
    SessionStore other;
    Session back = other.load_session(file);
    REQUIRE(back.state == store.session(id).state, "save/load changed session " + id);
    REQUIRE(other.session_document(id) == store.session_document(id), "document changed for " + id);
  }
  fs::remove_all(tmp);
  return failures;
}

}  // namespace dpcl::acceptance

int main() {
  using namespace dpcl::acceptance;
  const std::vector<std::pair<std::string, Failures (*)()>> criteria = {
      {"corpus fidelity", corpus_fidelity},
      {"canonical scenario", canonical_scenario},
      {"discharge path", discharge_path},
      {"request-return path", request_return_path},
      {"rewrite equivalence", rewrite_equivalence},
      {"property suites", property_suites},
      {"service contract", service_contract},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    Failures f;
    try {
      f = check();
    } catch (const std::exception& e) {
      f.push_back(std::string("exception: ") + e.what());
    }
    if (f.empty()) {
      std::cout << "PASS " << name << "\n";
    } else {
      ++failed;
      std::cout << "FAIL " << name << ": " << f.front();
      if (f.size() > 1) std::cout << " (+" << f.size() - 1 << " more)";
      std::cout << "\n";
    }
  }
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed\n";
  return failed == 0 ? 0 : 1;
}
