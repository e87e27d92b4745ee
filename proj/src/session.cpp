#include "dpcl/session.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <sstream>

namespace dpcl {

namespace fs = std::filesystem;

struct SessionStore::Entry {
  mutable std::mutex mu;
  std::string id;
  std::optional<std::string> parent;
  std::int64_t created_at = 0;
  std::int64_t last_step_at = 0;
  std::shared_ptr<const ProgramRecord> program;
  Trace trace;  // final_state is the live state
};

namespace {

std::int64_t now_ms() {
  using namespace std::chrono;
  return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

}  // namespace

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io, "cannot read '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const fs::path& path, const std::string& text) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::io, "cannot write '" + path.string() + "'");
    out << text;
    if (!out) throw Error(ErrorCode::io, "cannot write '" + path.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::io, "cannot write '" + path.string() + "': " + ec.message());
}

SessionStore::SessionStore(std::optional<fs::path> dir) : dir_(std::move(dir)), rng_(std::random_device{}()) {
  if (!dir_) return;
  std::error_code ec;
  fs::create_directories(*dir_ / "programs", ec);
  if (ec) throw Error(ErrorCode::io, "cannot create '" + dir_->string() + "': " + ec.message());
  reload();
}

SessionStore::~SessionStore() = default;

std::string SessionStore::fresh_id(char prefix) {
  static constexpr char kAlphabet[] = "abcdefghijkmnpqrstuvwxyz23456789";
  std::uniform_int_distribution<std::size_t> pick(0, sizeof(kAlphabet) - 2);
  while (true) {
    std::string id(1, prefix);
    for (int i = 0; i < 8; ++i) id += kAlphabet[pick(rng_)];
    if (!programs_.count(id) && !sessions_.count(id)) return id;
  }
}

std::shared_ptr<const ProgramRecord> SessionStore::register_program(const std::string& id,
                                                                   const std::string& source,
                                                                   const std::string& name) {
  ParseResult parsed = parse_and_validate(source, name);
  if (!parsed.program)
    throw Error(ErrorCode::invalid_program,
                "program '" + name + "' does not validate:\n" + format_diagnostics(parsed.diagnostics));
  auto rec = std::make_shared<ProgramRecord>();
  rec->id = id;
  rec->name = name;
  rec->source = source;
  rec->warnings = parsed.diagnostics;
  rec->interpreter = std::make_shared<const Interpreter>(std::move(*parsed.program));
  programs_[id] = rec;
  return rec;
}

AddProgramResult SessionStore::add_program(const std::string& source, const std::string& name) {
  ParseResult parsed = parse_and_validate(source, name);
  if (!parsed.program) return AddProgramResult{nullptr, parsed.diagnostics};
  std::lock_guard lock(mu_);
  std::string id = fresh_id('p');
  auto rec = register_program(id, source, name);
  persist_program(*rec);
  return AddProgramResult{rec, parsed.diagnostics};
}

std::shared_ptr<const ProgramRecord> SessionStore::program(const std::string& id) const {
  std::lock_guard lock(mu_);
  auto it = programs_.find(id);
  if (it == programs_.end()) throw Error(ErrorCode::unknown_program, "unknown program '" + id + "'");
  return it->second;
}

std::shared_ptr<SessionStore::Entry> SessionStore::entry(const std::string& id) const {
  std::lock_guard lock(mu_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw Error(ErrorCode::unknown_session, "unknown session '" + id + "'");
  return it->second;
}

Session SessionStore::snapshot(const Entry& e) const {
  return Session{e.id, e.parent, e.created_at, e.last_step_at, e.program, e.trace.final_state};
}

Session SessionStore::create_session(const std::string& program_id) {
  auto prog = program(program_id);
  auto e = std::make_shared<Entry>();
  e->program = prog;
  e->created_at = now_ms();
  e->trace.initial = prog->interpreter->init_state(0);
  e->trace.final_state = e->trace.initial;
  {
    std::lock_guard lock(mu_);
    e->id = fresh_id('s');
    sessions_[e->id] = e;
  }
  std::lock_guard lock(e->mu);
  persist(*e);
  return snapshot(*e);
}

Session SessionStore::fork_session(const std::string& id) {
  auto parent = entry(id);
  auto child = std::make_shared<Entry>();
  {
    std::lock_guard lock(parent->mu);
    child->program = parent->program;
    child->parent = parent->id;
    child->trace.initial = parent->trace.final_state;
    child->trace.final_state = parent->trace.final_state;
  }
  child->created_at = now_ms();
  {
    std::lock_guard lock(mu_);
    child->id = fresh_id('s');
    sessions_[child->id] = child;
  }
  std::lock_guard lock(child->mu);
  persist(*child);
  return snapshot(*child);
}

Session SessionStore::session(const std::string& id) const {
  auto e = entry(id);
  std::lock_guard lock(e->mu);
  return snapshot(*e);
}

std::vector<std::string> SessionStore::session_ids() const {
  std::lock_guard lock(mu_);
  std::vector<std::string> out;
  for (const auto& [id, e] : sessions_) out.push_back(id);
  return out;
}

std::vector<std::string> SessionStore::lineage(const std::string& id) const {
  std::vector<std::string> out;
  std::optional<std::string> cur = session(id).parent;
  while (cur) {
    // Guard against a cycle introduced by hand-edited files.
    if (std::find(out.begin(), out.end(), *cur) != out.end() || *cur == id) break;
    out.push_back(*cur);
    std::lock_guard lock(mu_);
    auto it = sessions_.find(*cur);
    if (it == sessions_.end()) break;
    cur = it->second->parent;
  }
  return out;
}

StepResult SessionStore::step(const std::string& id, const Step& step) {
  auto e = entry(id);
  std::lock_guard lock(e->mu);
  StepOutcome out = e->program->interpreter->apply(e->trace.final_state, step);
  e->trace.entries.push_back(TraceEntry{step, out.delta, out.state.clock});
  e->trace.final_state = out.state;
  e->last_step_at = now_ms();
  persist(*e);
  return StepResult{std::move(out.delta), std::move(out.state)};
}

Trace SessionStore::trace(const std::string& id) const {
  auto e = entry(id);
  std::lock_guard lock(e->mu);
  return e->trace;
}

namespace {

Json document_of(const std::string& id, const std::optional<std::string>& parent,
                 std::int64_t created_at, std::int64_t last_step_at, const ProgramRecord& prog,
                 const InstitutionalState& state) {
  Json j{{"dpcl_schema", kSchemaVersion},
         {"id", id},
         {"created_at", created_at},
         {"last_step_at", last_step_at},
         {"program", Json{{"id", prog.id}, {"name", prog.name}, {"source", prog.source}}},
         {"state", state_to_json(state, prog.interpreter.get())}};
  j["parent"] = parent ? Json(*parent) : Json();
  return j;
}

}  // namespace

Json SessionStore::session_document(const std::string& id) const {
  auto e = entry(id);
  std::lock_guard lock(e->mu);
  return document_of(e->id, e->parent, e->created_at, e->last_step_at, *e->program,
                     e->trace.final_state);
}

void SessionStore::save_session(const std::string& id, const fs::path& path) const {
  write_text_file(path, dump(session_document(id)));
}

void SessionStore::persist(const Entry& e) const {
  if (!dir_) return;
  write_text_file(*dir_ / (e.id + ".json"),
                  dump(document_of(e.id, e.parent, e.created_at, e.last_step_at, *e.program,
                                   e.trace.final_state)));
  write_text_file(*dir_ / (e.id + ".trace.json"),
                  dump(trace_to_json(e.trace, e.program->interpreter.get())));
}

void SessionStore::persist_program(const ProgramRecord& p) const {
  if (!dir_) return;
  write_text_file(*dir_ / "programs" / (p.id + ".dpcl"), p.source);
}

Session SessionStore::load_session(const fs::path& path) {
  return load_session_document(parse_json(read_text_file(path)));
}

Session SessionStore::load_session_document(const Json& doc) {
  std::shared_ptr<Entry> e;
  try {
    int v = doc.at("dpcl_schema").get<int>();
    if (v != kSchemaVersion)
      throw Error(ErrorCode::version_mismatch,
                  "schema version " + std::to_string(v) + " is not supported (expected " +
                      std::to_string(kSchemaVersion) + ")");
    e = std::make_shared<Entry>();
    e->id = doc.at("id").get<std::string>();
    if (!doc.at("parent").is_null()) e->parent = doc.at("parent").get<std::string>();
    e->created_at = doc.at("created_at").get<std::int64_t>();
    e->last_step_at = doc.at("last_step_at").get<std::int64_t>();
    e->trace.initial = state_from_json(doc.at("state"));
    e->trace.final_state = e->trace.initial;
    const Json& prog = doc.at("program");
    std::string pid = prog.at("id").get<std::string>();
    std::string source = prog.at("source").get<std::string>();
    std::string name = prog.at("name").get<std::string>();

    std::lock_guard lock(mu_);
    auto it = programs_.find(pid);
    if (it != programs_.end() && it->second->source == source) {
      e->program = it->second;
    } else {
      if (it != programs_.end()) pid = fresh_id('p');
      try {
        e->program = register_program(pid, source, name);
      } catch (const Error& err) {
        throw Error(ErrorCode::corrupt_payload, err.what());
      }
      persist_program(*e->program);
    }
    sessions_[e->id] = e;
  } catch (const Json::exception& ex) {
    throw Error(ErrorCode::corrupt_payload, std::string("malformed session document: ") + ex.what());
  }
  std::lock_guard lock(e->mu);
  persist(*e);
  return snapshot(*e);
}

void SessionStore::reload() {
  for (const auto& f : fs::directory_iterator(*dir_ / "programs")) {
    if (f.path().extension() != ".dpcl") continue;
    std::string id = f.path().stem().string();
    try {
      register_program(id, read_text_file(f.path()), id);
    } catch (const Error&) {
      // A program that no longer validates stays unloaded; sessions using it
      // carry their own copy of the source.
    }
  }
  for (const auto& f : fs::directory_iterator(*dir_)) {
    std::string file = f.path().filename().string();
    if (f.path().extension() != ".json" || file.ends_with(".trace.json")) continue;
    Json doc = parse_json(read_text_file(f.path()));
    std::optional<Trace> t;
    if (doc.contains("id") && doc["id"].is_string()) {
      fs::path trace_path = *dir_ / (doc["id"].get<std::string>() + ".trace.json");
      if (fs::exists(trace_path)) t = trace_from_json(parse_json(read_text_file(trace_path)));
    }
    Session s = load_session_document(doc);
    if (!t || !(t->final_state == s.state)) continue;
    auto e = sessions_.at(s.id);
    std::lock_guard lock(e->mu);
    e->trace = std::move(*t);
    persist(*e);
  }
}

}  // namespace dpcl
