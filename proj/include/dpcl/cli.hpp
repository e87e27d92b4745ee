#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

namespace dpcl {

/// Exit codes: 0 ok, 1 domain error (diagnostics, failed step, bad transform),
/// 2 system error (unreadable or unwritable files).
inline constexpr int kExitOk = 0;
inline constexpr int kExitDomain = 1;
inline constexpr int kExitSystem = 2;

int cmd_check(const std::filesystem::path& program, std::ostream& out, std::ostream& err);

struct RunOptions {
  std::filesystem::path program;
  std::optional<std::filesystem::path> scenario;  // none runs the empty scenario
  std::optional<std::filesystem::path> trace;
  std::string format = "summary";                 // summary | json
};

int cmd_run(const RunOptions& opts, std::ostream& out, std::ostream& err);

struct RewriteOptions {
  std::filesystem::path program;
  std::string transform;
  bool in_place = false;
  std::optional<std::filesystem::path> out;  // neither set: print to `out`
};

int cmd_rewrite(const RewriteOptions& opts, std::ostream& out, std::ostream& err);

struct ReplOptions {
  std::filesystem::path program;
  std::optional<std::filesystem::path> sessions_dir;
  bool prompt = true;
};

int cmd_repl(const ReplOptions& opts, std::istream& in, std::ostream& out, std::ostream& err);

/// Full command line, parsed with CLI11. `serve` blocks until the server stops.
int cli_main(int argc, const char* const* argv, std::istream& in, std::ostream& out,
             std::ostream& err);

}  // namespace dpcl
