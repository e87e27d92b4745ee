#include <gtest/gtest.h>

#include <filesystem>

#include "http_test_support.hpp"
#include "test_support.hpp"

namespace dpcl {
namespace {

namespace fs = std::filesystem;
using testing::get;
using testing::LiveServer;
using testing::post;
using testing::read_corpus;
using testing::Reply;

std::size_t count_category(const Json& state, const std::string& category) {
  std::size_t n = 0;
  for (const auto& p : state["positions"]) n += p["category"] == category;
  return n;
}

struct HttpFixture : ::testing::Test {
  SessionStore store;
  LiveServer server{store};
  httplib::Client client = server.client();

  std::string add_program(const std::string& source) {
    auto r = client.Post("/programs", source, "text/plain");
    EXPECT_TRUE(r);
    EXPECT_EQ(r->status, 201) << r->body;
    return Json::parse(r->body)["program_id"];
  }

  std::string library_session() {
    Reply r = post(client, "/sessions", {{"program_id", add_program(read_corpus("library.dpcl"))}});
    EXPECT_EQ(r.status, 201);
    return r.body["session_id"];
  }

  Reply step(const std::string& sid, const std::string& step_json) {
    return testing::reply_of(client.Post("/sessions/" + sid + "/steps", step_json, "application/json"));
  }

  void borrow(const std::string& sid) {
    step(sid, R"({"assert": {"name": "alice", "descriptors": ["student"], "properties": {"id_card": "c1"}}})");
    step(sid, R"({"assert": {"name": "library"}})");
    step(sid, R"({"do": {"actor": "alice", "event": "register", "refinements": {"instrument": "c1"}}})");
    step(sid, R"({"do": {"actor": "alice", "event": "borrow", "refinements": {"item": "book1"}}})");
  }
};

TEST_F(HttpFixture, PostProgramCorpusAndEmpty) {
  add_program(read_corpus("library.dpcl"));
  auto r = client.Post("/programs", "", "text/plain");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 201);
  EXPECT_EQ(r->get_header_value("Content-Type"), "application/json");
}

TEST_F(HttpFixture, PostProgramJsonForm) {
  Reply r = post(client, "/programs", {{"source", read_corpus("weather.dpcl")}, {"name", "weather"}});
  EXPECT_EQ(r.status, 201);
  EXPECT_EQ(get(client, "/programs/" + r.body["program_id"].get<std::string>()).body["name"], "weather");
}

TEST_F(HttpFixture, PostProgramMissingField) {
  auto r = client.Post("/programs", "power { holder: a action: #b }", "text/plain");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 422);
  Json j = Json::parse(r->body);
  EXPECT_NE(j["error"]["message"].get<std::string>().find("consequence"), std::string::npos);
  ASSERT_EQ(j["diagnostics"].size(), 1u);
  EXPECT_NE(j["diagnostics"][0]["message"].get<std::string>().find("consequence"), std::string::npos);
}

TEST_F(HttpFixture, CreateSessions) {
  std::string pid = add_program(read_corpus("library.dpcl"));
  Reply a = post(client, "/sessions", {{"program_id", pid}});
  Reply b = post(client, "/sessions", {{"program_id", pid}});
  EXPECT_EQ(a.status, 201);
  EXPECT_EQ(count_category(a.body["state"], "power"), 2u);
  EXPECT_NE(a.body["session_id"], b.body["session_id"]);
  Reply missing = post(client, "/sessions", {{"program_id", "p-none"}});
  EXPECT_EQ(missing.status, 404);
  EXPECT_EQ(missing.body["error"]["code"], "unknown-program");
}

TEST_F(HttpFixture, RegisterStepAddsMember) {
  std::string sid = library_session();
  step(sid, R"({"assert": {"name": "alice", "descriptors": ["student"], "properties": {"id_card": "c1"}}})");
  Reply r = step(sid, R"({"do":{"actor":"alice","event":"register","refinements":{"instrument":"c1"}}})");
  EXPECT_EQ(r.status, 200);
  EXPECT_EQ(r.body["disabled"], false);
  const Json& changes = r.body["delta"]["descriptor_changes"];
  ASSERT_EQ(changes.size(), 1u);
  EXPECT_EQ(changes[0]["descriptor"], "member");
  EXPECT_EQ(changes[0]["added"], true);
}

TEST_F(HttpFixture, AdvanceZeroIsEmpty) {
  std::string sid = library_session();
  Reply r = step(sid, R"({"advance": "0s"})");
  EXPECT_EQ(r.status, 200);
  EXPECT_EQ(r.body["delta"]["empty"], true);
}

TEST_F(HttpFixture, DisabledActionIs200) {
  std::string sid = library_session();
  step(sid, R"({"assert": {"name": "bob"}})");
  Reply r = step(sid, R"({"do": {"actor": "bob", "event": "borrow"}})");
  EXPECT_EQ(r.status, 200);
  EXPECT_EQ(r.body["disabled"], true);
}

TEST_F(HttpFixture, StepErrors) {
  std::string sid = library_session();
  Json before = get(client, "/sessions/" + sid + "/state").body;
  Reply ghost = step(sid, R"({"do": {"actor": "ghost", "event": "borrow"}})");
  EXPECT_EQ(ghost.status, 409);
  EXPECT_EQ(ghost.body["error"]["code"], "unknown-actor");
  EXPECT_EQ(get(client, "/sessions/" + sid + "/state").body, before);
  EXPECT_EQ(step(sid, "{not json").status, 400);
  EXPECT_EQ(step(sid, R"({"jump": 1})").status, 400);
  EXPECT_EQ(step("s-none", R"({"advance": "1s"})").status, 404);
}

TEST_F(HttpFixture, PositionQueries) {
  std::string sid = library_session();
  EXPECT_EQ(get(client, "/sessions/" + sid + "/positions?violated=true").body, Json::array());
  borrow(sid);
  Reply duties = get(client, "/sessions/" + sid + "/positions?kind=duty");
  ASSERT_EQ(duties.status, 200);
  ASSERT_EQ(duties.body.size(), 1u);
  EXPECT_EQ(duties.body[0]["label"], "d1");
  EXPECT_EQ(duties.body[0]["view"]["holder"], "alice");
  Reply by_action = get(client, "/sessions/" + sid + "/positions?action=request_return");
  ASSERT_EQ(by_action.body.size(), 1u);
  EXPECT_EQ(get(client, "/sessions/" + sid + "/positions?kind=bogus").status, 400);
  EXPECT_EQ(get(client, "/sessions/s-none/positions").status, 404);
}

TEST_F(HttpFixture, EnabledAfterViolationIncludesFine) {
  std::string sid = library_session();
  borrow(sid);
  step(sid, R"({"advance": "1m"})");
  step(sid, R"({"advance": "1s"})");
  Reply r = get(client, "/sessions/" + sid + "/enabled?actor=library");
  ASSERT_EQ(r.status, 200);
  std::vector<std::string> events;
  for (const auto& e : r.body) events.push_back(e["event"]);
  EXPECT_NE(std::find(events.begin(), events.end(), "fine"), events.end());
  EXPECT_EQ(get(client, "/sessions/" + sid + "/enabled?actor=ghost").status, 400);
  EXPECT_EQ(get(client, "/sessions/" + sid + "/enabled").status, 400);
}

TEST_F(HttpFixture, TraceReplays) {
  std::string sid = library_session();
  borrow(sid);
  Reply r = get(client, "/sessions/" + sid + "/trace");
  ASSERT_EQ(r.status, 200);
  Trace t = trace_from_json(r.body);
  EXPECT_EQ(t.entries.size(), 4u);
  EXPECT_EQ(t.replay(), store.session(sid).state);
}

TEST_F(HttpFixture, GetsDoNotMutate) {
  std::string sid = library_session();
  borrow(sid);
  Json before = get(client, "/sessions/" + sid + "/state").body;
  for (const char* path : {"/state", "/positions", "/enabled?actor=alice", "/trace", ""})
    get(client, "/sessions/" + sid + path);
  EXPECT_EQ(get(client, "/sessions/" + sid + "/state").body, before);
  EXPECT_EQ(store.trace(sid).entries.size(), 4u);
}

TEST_F(HttpFixture, ForkFreshEqualSnapshots) {
  std::string sid = library_session();
  Reply f = post(client, "/sessions/" + sid + "/fork", Json::object());
  ASSERT_EQ(f.status, 201);
  std::string child = f.body["session_id"];
  EXPECT_EQ(get(client, "/sessions/" + child + "/state").body,
            get(client, "/sessions/" + sid + "/state").body);
  EXPECT_EQ(get(client, "/sessions/" + child).body["parent"], sid);
  step(child, R"({"advance": "1d"})");
  EXPECT_EQ(get(client, "/sessions/" + sid + "/state").body["clock"], 0);
  EXPECT_EQ(post(client, "/sessions/s-none/fork", Json::object()).status, 404);
}

TEST_F(HttpFixture, Rewrite) {
  std::string pid = add_program(read_corpus("library.dpcl"));
  Reply r = post(client, "/rewrite", {{"program_id", pid}, {"transform", "violation-to-power"}});
  ASSERT_EQ(r.status, 201);
  EXPECT_NE(r.body["source"].get<std::string>().find("#declare_violation"), std::string::npos);
  EXPECT_NE(r.body["program_id"], pid);
  EXPECT_EQ(r.body["sites"], Json::array({"borrowing/d1"}));
  Reply again = post(client, "/rewrite", {{"program_id", r.body["program_id"]}, {"transform", "violation-to-power"}});
  EXPECT_EQ(again.status, 422);
  std::string plain = add_program(read_corpus("positions.dpcl"));
  EXPECT_EQ(post(client, "/rewrite", {{"program_id", plain}, {"transform", "violation-to-power"}}).status, 422);
  EXPECT_EQ(post(client, "/rewrite", {{"program_id", pid}, {"transform", "nope"}}).status, 422);
  EXPECT_EQ(post(client, "/rewrite", {{"program_id", "p-none"}, {"transform", "violation-to-power"}}).status, 404);
}

TEST_F(HttpFixture, UnknownRouteAndCors) {
  Reply r = get(client, "/nowhere");
  EXPECT_EQ(r.status, 404);
  EXPECT_TRUE(r.body["error"].contains("code"));
  auto opt = client.Options("/sessions");
  ASSERT_TRUE(opt);
  EXPECT_EQ(opt->status, 204);
  EXPECT_EQ(opt->get_header_value("Access-Control-Allow-Origin"), "*");
}

TEST_F(HttpFixture, ConcurrentStepsAreTotallyOrdered) {
  std::string sid = library_session();
  std::vector<std::thread> threads;
  for (int t = 0; t < 4; ++t)
    threads.emplace_back([&] {
      auto c = server.client();
      for (int i = 0; i < 10; ++i) c.Post("/sessions/" + sid + "/steps", R"({"advance": "1s"})", "application/json");
    });
  for (auto& t : threads) t.join();
  Trace t = trace_from_json(get(client, "/sessions/" + sid + "/trace").body);
  ASSERT_EQ(t.entries.size(), 40u);
  for (std::size_t i = 0; i < t.entries.size(); ++i) EXPECT_EQ(t.entries[i].clock, static_cast<Ticks>(i + 1));
}

TEST(HttpRestart, SessionsSurvive) {
  fs::path dir = fs::temp_directory_path() / ("dpcl-http-" + std::to_string(std::random_device{}()));
  std::string sid;
  Json state;
  {
    SessionStore store(dir);
    LiveServer server(store);
    auto c = server.client();
    auto p = c.Post("/programs", read_corpus("library.dpcl"), "text/plain");
    sid = post(c, "/sessions", {{"program_id", Json::parse(p->body)["program_id"]}}).body["session_id"];
    c.Post("/sessions/" + sid + "/steps", R"({"advance": "3h"})", "application/json");
    state = get(c, "/sessions/" + sid + "/state").body;
  }
  {
    SessionStore store(dir);
    LiveServer server(store);
    auto c = server.client();
    EXPECT_EQ(get(c, "/sessions/" + sid + "/state").body, state);
  }
  fs::remove_all(dir);
}

}  // namespace
}  // namespace dpcl
