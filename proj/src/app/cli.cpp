#include "dpcl/cli.hpp"

#include <CLI11.hpp>
#include <iostream>

#include "dpcl/http_service.hpp"
#include "dpcl/printer.hpp"
#include "dpcl/render.hpp"
#include "dpcl/repl.hpp"
#include "dpcl/rewriter.hpp"
#include "dpcl/serialize.hpp"
#include "dpcl/session.hpp"

namespace dpcl {

namespace fs = std::filesystem;

namespace {

// Reads and validates a program, printing diagnostics. Returns an exit code
// on failure.
std::variant<Program, int> load(const fs::path& path, std::ostream& err) {
  std::string source;
  try {
    source = read_text_file(path);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitSystem;
  }
  ParseResult r = parse_and_validate(source, path.string());
  if (!r.diagnostics.empty()) err << format_diagnostics(r.diagnostics);
  if (!r.program) return kExitDomain;
  return std::move(*r.program);
}

}  // namespace

int cmd_check(const fs::path& program, std::ostream& out, std::ostream& err) {
  auto p = load(program, err);
  if (auto* code = std::get_if<int>(&p)) return *code;
  out << program.string() << ": ok\n";
  return kExitOk;
}

int cmd_run(const RunOptions& opts, std::ostream& out, std::ostream& err) {
  auto p = load(opts.program, err);
  if (auto* code = std::get_if<int>(&p)) return *code;
  if (opts.format != "summary" && opts.format != "json") {
    err << "error: unknown format '" << opts.format << "' (summary or json)\n";
    return kExitDomain;
  }
  Scenario scenario;
  try {
    if (opts.scenario) scenario = scenario_from_json(parse_json(read_text_file(*opts.scenario)));
  } catch (const Error& e) {
    err << "error[" << to_string(e.code()) << "]: " << e.what() << "\n";
    return e.code() == ErrorCode::io ? kExitSystem : kExitDomain;
  }

  Interpreter interp(std::move(std::get<Program>(p)));
  Trace trace = interp.run(scenario);
  Json trace_json = trace_to_json(trace, &interp);
  if (opts.trace) {
    try {
      write_text_file(*opts.trace, dump(trace_json));
    } catch (const Error& e) {
      err << "error: " << e.what() << "\n";
      return kExitSystem;
    }
  }

  if (opts.format == "json") {
    out << dump(trace_json);
  } else {
    out << trace.entries.size() << " of " << scenario.steps.size() << " steps applied\n";
    out << render_state(interp, trace.final_state);
  }
  if (trace.failure) {
    const StepFailure& f = *trace.failure;
    err << "step " << f.step_index + 1 << " (" << describe_step(scenario.steps.at(f.step_index))
        << ") failed: error[" << to_string(f.code) << "]: " << f.message << "\n";
    return kExitDomain;
  }
  return kExitOk;
}

int cmd_rewrite(const RewriteOptions& opts, std::ostream& out, std::ostream& err) {
  auto p = load(opts.program, err);
  if (auto* code = std::get_if<int>(&p)) return *code;
  RewriteResult r;
  try {
    r = apply_all(std::get<Program>(p), opts.transform);
  } catch (const Error& e) {
    err << "error[" << to_string(e.code()) << "]: " << e.what() << "\n";
    return kExitDomain;
  }
  std::string text = pretty_print(r.program);

  std::string summary = std::to_string(r.sites.size()) + (r.sites.size() == 1 ? " site" : " sites");
  for (std::size_t i = 0; i < r.sites.size(); ++i) summary += (i ? ", " : ": ") + r.sites[i];
  summary += "\n";

  std::optional<fs::path> target = opts.in_place ? std::optional(opts.program) : opts.out;
  if (!target) {
    out << text;
    err << summary;
    return kExitOk;
  }
  try {
    write_text_file(*target, text);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitSystem;
  }
  out << summary;
  return kExitOk;
}

int cmd_repl(const ReplOptions& opts, std::istream& in, std::ostream& out, std::ostream& err) {
  std::string source;
  try {
    source = read_text_file(opts.program);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitSystem;
  }
  try {
    SessionStore store(opts.sessions_dir);
    AddProgramResult added = store.add_program(source, opts.program.string());
    if (!added.diagnostics.empty()) err << format_diagnostics(added.diagnostics);
    if (!added.program) return kExitDomain;
    Session s = store.create_session(added.program->id);
    out << "session " << s.id << " on " << opts.program.string() << " (:help for commands)\n";
    Repl repl(store, s.id, out);
    repl.run(in, opts.prompt);
  } catch (const Error& e) {
    err << "error[" << to_string(e.code()) << "]: " << e.what() << "\n";
    return e.code() == ErrorCode::io ? kExitSystem : kExitDomain;
  }
  return kExitOk;
}

int cli_main(int argc, const char* const* argv, std::istream& in, std::ostream& out,
             std::ostream& err) {
  CLI::App app{"DPCL: normative specifications with powers and duties", "dpcl"};
  app.require_subcommand(1);
  std::optional<std::string> sessions_dir;
  app.add_option("--sessions-dir", sessions_dir, "Directory for persisted sessions")
      ->envname("DPCL_SESSIONS_DIR");

  std::string check_path;
  auto* check = app.add_subcommand("check", "Parse and validate a program");
  check->add_option("program", check_path)->required();

  RunOptions run;
  std::string run_program;
  std::optional<std::string> scenario, trace;
  auto* run_cmd = app.add_subcommand("run", "Run a scenario and write its trace");
  run_cmd->add_option("program", run_program)->required();
  run_cmd->add_option("--scenario", scenario, "Scenario JSON file");
  run_cmd->add_option("--trace", trace, "Write the trace JSON here");
  run_cmd->add_option("--format", run.format, "summary or json")
      ->check(CLI::IsMember({"summary", "json"}));

  RewriteOptions rw;
  std::string rw_program;
  std::optional<std::string> rw_out;
  auto* rw_cmd = app.add_subcommand("rewrite", "Apply a program transformation");
  rw_cmd->add_option("program", rw_program)->required();
  rw_cmd->add_option("--transform", rw.transform)->required();
  auto* in_place = rw_cmd->add_flag("--in-place", rw.in_place, "Overwrite the program file");
  rw_cmd->add_option("--out", rw_out, "Write the result here")->excludes(in_place);

  std::string repl_program;
  auto* repl_cmd = app.add_subcommand("repl", "Step a session interactively");
  repl_cmd->add_option("program", repl_program)->required();

  int port = kDefaultPort;
  std::string host = "127.0.0.1";
  auto* serve = app.add_subcommand("serve", "Serve the HTTP API");
  serve->add_option("--port", port, "Port")->check(CLI::Range(0, 65535));
  serve->add_option("--host", host, "Address to bind");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitDomain;
  }

  std::optional<fs::path> dir;
  if (sessions_dir) dir = *sessions_dir;

  if (*check) return cmd_check(check_path, out, err);
  if (*run_cmd) {
    run.program = run_program;
    if (scenario) run.scenario = *scenario;
    if (trace) run.trace = *trace;
    return cmd_run(run, out, err);
  }
  if (*rw_cmd) {
    rw.program = rw_program;
    if (rw_out) rw.out = *rw_out;
    return cmd_rewrite(rw, out, err);
  }
  if (*repl_cmd) return cmd_repl({repl_program, dir, true}, in, out, err);

  try {
    SessionStore store(dir);
    HttpService service(store);
    int bound = service.bind(host, port);
    if (bound < 0) {
      err << "error: cannot bind " << host << ":" << port << "\n";
      return kExitSystem;
    }
    out << "serving on http://" << host << ":" << bound << std::endl;
    return service.listen() ? kExitOk : kExitSystem;
  } catch (const Error& e) {
    err << "error[" << to_string(e.code()) << "]: " << e.what() << "\n";
    return kExitSystem;
  }
}

}  // namespace dpcl
