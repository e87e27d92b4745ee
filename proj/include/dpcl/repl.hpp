#pragma once

#include <iosfwd>
#include <string>

#include "dpcl/session.hpp"

namespace dpcl {

/// Line-oriented interactive session over a SessionStore. Each mutating
/// command maps to one store operation and prints the resulting delta.
class Repl {
 public:
  Repl(SessionStore& store, std::string session_id, std::ostream& out);

  /// Executes one line. Returns false on `:quit`.
  bool execute(const std::string& line);
  /// Reads until end of input or `:quit`. With `prompt`, prints `dpcl> `.
  void run(std::istream& in, bool prompt);

  const std::string& session_id() const { return session_; }

 private:
  void cmd_state();
  void cmd_positions(const std::string& args);
  void cmd_advance(const std::string& args);
  void cmd_assert(const std::string& args);
  void cmd_do(const std::string& args);
  void cmd_produce(const std::string& args);
  void cmd_enabled(const std::string& args);
  void cmd_fork();
  void cmd_save(const std::string& args);
  void cmd_load(const std::string& args);
  void cmd_help();
  void step(const Step& s);

  SessionStore& store_;
  std::string session_;
  std::ostream& out_;
};

/// Parses `#event { field: value, ... }` into a DoAction for `actor`.
/// Throws Error(invalid_step).
DoAction parse_do_command(const std::string& actor, const std::string& event_text, Ticks now);

}  // namespace dpcl
