#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

#include "dpcl/repl.hpp"
#include "test_support.hpp"

namespace dpcl {
namespace {

using testing::read_corpus;

struct ReplFixture : ::testing::Test {
  SessionStore store;
  std::ostringstream out;
  std::unique_ptr<Repl> repl;

  void open(const std::string& source) {
    auto r = store.add_program(source);
    ASSERT_TRUE(r.program);
    repl = std::make_unique<Repl>(store, store.create_session(r.program->id).id, out);
  }

  std::string run(const std::string& line) {
    out.str("");
    EXPECT_TRUE(repl->execute(line));
    return out.str();
  }

  bool contains(const std::string& text, const std::string& needle) {
    return text.find(needle) != std::string::npos;
  }

  void borrow() {
    run(":assert alice student id_card=c1");
    run(":assert library");
    run("do alice #register { instrument: c1 }");
    run("do alice #borrow { item: book1 }");
  }
};

TEST_F(ReplFixture, EmptyProgramState) {
  open("");
  EXPECT_EQ(run(":state"), "clock 0 (0s)\nno objects, no positions\n");
}

TEST_F(ReplFixture, EnabledListsRegister) {
  open(read_corpus("library.dpcl"));
  run(":assert alice student id_card=c1");
  std::string text = run(":enabled alice");
  EXPECT_TRUE(contains(text, "#register { instrument: c1 }")) << text;
  EXPECT_FALSE(contains(text, "#borrow")) << text;
}

TEST_F(ReplFixture, ViolationAfterTimeout) {
  open(read_corpus("library.dpcl"));
  borrow();
  std::string first = run(":advance 1m");
  EXPECT_FALSE(contains(first, "violated")) << first;
  std::string second = run(":advance 1s");
  EXPECT_TRUE(contains(second, "d1 violated")) << second;
  EXPECT_TRUE(contains(second, "power library #fine")) << second;
}

TEST_F(ReplFixture, CommandsMatchStoreOperations) {
  open(read_corpus("library.dpcl"));
  borrow();
  run(":advance 2h");
  Session s = store.session(repl->session_id());
  EXPECT_EQ(s.state.clock, 7200);
  EXPECT_EQ(store.trace(s.id).entries.size(), 5u);
  // The trace records exactly the steps the REPL issued.
  auto steps = store.trace(s.id).entries;
  EXPECT_EQ(describe_step(steps[2].step), "alice #register { instrument: c1 }");
  EXPECT_EQ(describe_step(steps[4].step), "advance 2h");
}

TEST_F(ReplFixture, ErrorsKeepTheSessionAlive) {
  open(read_corpus("library.dpcl"));
  EXPECT_TRUE(contains(run("do ghost #borrow"), "error[unknown-actor]"));
  EXPECT_TRUE(contains(run(":advance soon"), "error[invalid-step]"));
  EXPECT_TRUE(contains(run("do alice borrow"), "error[invalid-step]"));
  EXPECT_TRUE(contains(run(":nope"), "unknown command"));
  EXPECT_TRUE(store.trace(repl->session_id()).entries.empty());
  EXPECT_TRUE(contains(run(":assert alice student"), "+ object #3 alice"));
}

TEST_F(ReplFixture, DisabledActIsReported) {
  open(read_corpus("library.dpcl"));
  run(":assert bob");
  EXPECT_TRUE(contains(run("do bob #borrow { item: x }"), "disabled"));
}

TEST_F(ReplFixture, PositionsByKind) {
  open(read_corpus("library.dpcl"));
  borrow();
  std::string duties = run(":positions duty");
  EXPECT_TRUE(contains(duties, "duty d1")) << duties;
  EXPECT_FALSE(contains(duties, "power")) << duties;
  EXPECT_EQ(run(":positions violated"), "no positions\n");
  EXPECT_TRUE(contains(run(":positions bogus"), "error"));
}

TEST_F(ReplFixture, ForkSwitchesToIsolatedBranch) {
  open(read_corpus("library.dpcl"));
  std::string parent = repl->session_id();
  EXPECT_TRUE(contains(run(":fork"), "forked"));
  EXPECT_NE(repl->session_id(), parent);
  run(":advance 1d");
  EXPECT_EQ(store.session(parent).state.clock, 0);
  EXPECT_EQ(store.session(repl->session_id()).state.clock, 86400);
}

TEST_F(ReplFixture, SaveAndLoad) {
  open(read_corpus("library.dpcl"));
  borrow();
  auto path = std::filesystem::temp_directory_path() / ("dpcl-repl-" + repl->session_id() + ".json");
  run(":save " + path.string());
  InstitutionalState saved = store.session(repl->session_id()).state;
  run(":advance 1d");
  EXPECT_TRUE(contains(run(":load " + path.string()), "loaded"));
  EXPECT_EQ(store.session(repl->session_id()).state, saved);
  std::filesystem::remove(path);
}

TEST_F(ReplFixture, ProduceAndQuit) {
  open(read_corpus("weather.dpcl"));
  EXPECT_TRUE(contains(run(":produce +raining"), "raining"));
  EXPECT_FALSE(repl->execute(":quit"));
}

TEST_F(ReplFixture, RunReadsUntilQuit) {
  open("");
  std::istringstream in(":state\n:quit\n:state\n");
  repl->run(in, false);
  EXPECT_EQ(out.str(), "clock 0 (0s)\nno objects, no positions\n");
}

TEST(ParseDo, RefinementValues) {
  DoAction d = parse_do_command("a", "#pay { amount: 30, due: 1d, who: bob, at: now() }", 5);
  EXPECT_EQ(d.event, "pay");
  EXPECT_EQ(d.refinements.at("amount"), Value{std::int64_t{30}});
  EXPECT_EQ(d.refinements.at("due"), Value{std::int64_t{86400}});
  EXPECT_EQ(d.refinements.at("who"), Value{Symbol{"bob"}});
  EXPECT_EQ(d.refinements.at("at"), Value{std::int64_t{5}});
  EXPECT_THROW(parse_do_command("a", "pay", 0), Error);
  EXPECT_THROW(parse_do_command("a", "#pay { x: a.b }", 0), Error);
}

}  // namespace
}  // namespace dpcl
