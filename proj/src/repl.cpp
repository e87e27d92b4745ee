#include "dpcl/repl.hpp"

#include <iostream>
#include <sstream>

#include "dpcl/render.hpp"

namespace dpcl {

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::pair<std::string, std::string> split_word(const std::string& s) {
  std::string t = trim(s);
  auto sp = t.find_first_of(" \t");
  if (sp == std::string::npos) return {t, {}};
  return {t.substr(0, sp), trim(t.substr(sp))};
}

std::vector<std::string> words(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

Value literal_value(const std::string& text) {
  if (text == "true") return true;
  if (text == "false") return false;
  if (!text.empty() && text.size() <= 18 &&
      text.find_first_not_of("0123456789", text[0] == '-' ? 1 : 0) == std::string::npos &&
      text != "-")
    return static_cast<std::int64_t>(std::stoll(text));
  return Symbol{text};
}

}  // namespace

DoAction parse_do_command(const std::string& actor, const std::string& event_text, Ticks now) {
  TermParseResult parsed = parse_term(event_text, "<repl>");
  if (!parsed.term || has_errors(parsed.diagnostics))
    throw Error(ErrorCode::invalid_step, trim(format_diagnostics(parsed.diagnostics)));
  const auto* ev = parsed.term->as<EventRef>();
  if (!ev) throw Error(ErrorCode::invalid_step, "expected an event such as #borrow { item: book1 }");
  DoAction d{actor, ev->name, {}};
  for (const Field& f : ev->refinements) {
    const Term& t = f.value;
    if (const auto* a = t.as<Atom>()) {
      d.refinements[f.name] = Symbol{a->name};
    } else if (const auto* v = t.as<TimeValue>()) {
      d.refinements[f.name] = v->ticks;
    } else if (const auto* du = t.as<DurationLiteral>()) {
      d.refinements[f.name] = duration_to_ticks(du->value);
    } else if (t.is<NowCall>()) {
      d.refinements[f.name] = now;
    } else {
      throw Error(ErrorCode::invalid_step,
                  "refinement '" + f.name + "' must be a name, a number or a duration");
    }
  }
  return d;
}

Repl::Repl(SessionStore& store, std::string session_id, std::ostream& out)
    : store_(store), session_(std::move(session_id)), out_(out) {}

void Repl::run(std::istream& in, bool prompt) {
  std::string line;
  while (true) {
    if (prompt) out_ << "dpcl> " << std::flush;
    if (!std::getline(in, line)) break;
    if (!execute(line)) break;
  }
}

bool Repl::execute(const std::string& raw) {
  std::string line = trim(raw);
  if (line.empty() || line.rfind("//", 0) == 0) return true;
  auto [cmd, args] = split_word(line);
  try {
    if (cmd == ":quit" || cmd == ":q") return false;
    if (cmd == ":state") cmd_state();
    else if (cmd == ":positions") cmd_positions(args);
    else if (cmd == ":advance") cmd_advance(args);
    else if (cmd == ":assert") cmd_assert(args);
    else if (cmd == "do") cmd_do(args);
    else if (cmd == ":produce") cmd_produce(args);
    else if (cmd == ":enabled") cmd_enabled(args);
    else if (cmd == ":fork") cmd_fork();
    else if (cmd == ":save") cmd_save(args);
    else if (cmd == ":load") cmd_load(args);
    else if (cmd == ":help") cmd_help();
    else out_ << "unknown command '" << cmd << "' (try :help)\n";
  } catch (const Error& e) {
    out_ << "error[" << to_string(e.code()) << "]: " << e.what() << "\n";
  }
  return true;
}

void Repl::step(const Step& s) {
  StepResult r = store_.step(session_, s);
  out_ << render_delta(*store_.session(session_).program->interpreter, r.state, r.delta);
}

void Repl::cmd_state() {
  Session s = store_.session(session_);
  out_ << render_state(*s.program->interpreter, s.state);
}

void Repl::cmd_positions(const std::string& args) {
  Session s = store_.session(session_);
  PositionFilter filter;
  std::string kind = trim(args);
  if (kind == "power") filter.kind = PositionCategory::power;
  else if (kind == "duty") filter.kind = PositionCategory::duty;
  else if (kind == "other") filter.kind = PositionCategory::other;
  else if (kind == "violated") filter.violated = true;
  else if (!kind.empty())
    throw Error(ErrorCode::invalid_step, "kind must be power, duty, other or violated");
  const Interpreter& in = *s.program->interpreter;
  auto ps = in.query_positions(s.state, filter);
  if (ps.empty()) out_ << "no positions\n";
  for (const auto& p : ps) out_ << render_position(in, s.state, p) << "\n";
}

void Repl::cmd_advance(const std::string& args) {
  auto d = parse_duration(trim(args));
  if (!d) throw Error(ErrorCode::invalid_step, "usage: :advance <duration>, e.g. :advance 1m");
  step(Advance{*d});
}

void Repl::cmd_assert(const std::string& args) {
  auto ws = words(args);
  if (ws.empty()) throw Error(ErrorCode::invalid_step, "usage: :assert <name> [desc,...] [key=value ...]");
  AssertObject a{ws[0], {}, {}};
  for (std::size_t i = 1; i < ws.size(); ++i) {
    auto eq = ws[i].find('=');
    if (eq != std::string::npos) {
      a.properties[ws[i].substr(0, eq)] = literal_value(ws[i].substr(eq + 1));
      continue;
    }
    std::istringstream list(ws[i]);
    for (std::string d; std::getline(list, d, ',');)
      if (!d.empty()) a.descriptors.push_back(d);
  }
  step(a);
}

void Repl::cmd_do(const std::string& args) {
  auto [actor, rest] = split_word(args);
  if (actor.empty() || rest.empty())
    throw Error(ErrorCode::invalid_step, "usage: do <actor> #<event> { field: value, ... }");
  step(parse_do_command(actor, rest, store_.session(session_).state.clock));
}

void Repl::cmd_produce(const std::string& args) {
  std::string t = trim(args);
  if (t.size() < 2 || (t[0] != '+' && t[0] != '-'))
    throw Error(ErrorCode::invalid_step, "usage: :produce +target | -target");
  step(Produce{t[0] == '+' ? Polarity::create : Polarity::remove, trim(t.substr(1))});
}

void Repl::cmd_enabled(const std::string& args) {
  std::string actor = trim(args);
  if (actor.empty()) throw Error(ErrorCode::invalid_step, "usage: :enabled <actor>");
  Session s = store_.session(session_);
  auto en = s.program->interpreter->enabled_actions(s.state, actor);
  if (en.empty()) out_ << "no enabled actions\n";
  for (const auto& e : en) out_ << e.text() << "  (power #" << e.power << ")\n";
}

void Repl::cmd_fork() {
  Session child = store_.fork_session(session_);
  out_ << "forked " << child.id << " from " << session_ << "\n";
  session_ = child.id;
}

void Repl::cmd_save(const std::string& args) {
  std::string path = trim(args);
  if (path.empty()) throw Error(ErrorCode::invalid_step, "usage: :save <path>");
  store_.save_session(session_, path);
  out_ << "saved " << session_ << " to " << path << "\n";
}

void Repl::cmd_load(const std::string& args) {
  std::string path = trim(args);
  if (path.empty()) throw Error(ErrorCode::invalid_step, "usage: :load <path>");
  Session s = store_.load_session(path);
  session_ = s.id;
  out_ << "loaded " << s.id << " (clock " << s.state.clock << ")\n";
}

void Repl::cmd_help() {
  out_ << ":state                          objects, compounds and positions\n"
          ":positions [power|duty|other|violated]\n"
          ":advance <duration>             e.g. :advance 1m\n"
          ":assert <name> [d1,d2] [k=v]    add an object\n"
          "do <actor> #event { k: v }      perform an action\n"
          ":produce +target | -target      create or remove an instance\n"
          ":enabled <actor>                actions the actor is empowered to perform\n"
          ":fork                           branch the session and switch to the branch\n"
          ":save <path> | :load <path>\n"
          ":quit\n";
}

}  // namespace dpcl
