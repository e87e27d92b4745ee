#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "dpcl/interpreter.hpp"
#include "dpcl/parser.hpp"
#include "dpcl/serialize.hpp"

namespace dpcl {

struct ProgramRecord {
  std::string id;
  std::string name;
  std::string source;
  std::vector<Diagnostic> warnings;
  std::shared_ptr<const Interpreter> interpreter;
};

/// Immutable copy of a session handed to callers.
struct Session {
  std::string id;
  std::optional<std::string> parent;
  std::int64_t created_at = 0;    // unix milliseconds
  std::int64_t last_step_at = 0;  // unix milliseconds, 0 before the first step
  std::shared_ptr<const ProgramRecord> program;
  InstitutionalState state;
};

struct StepResult {
  StateDelta delta;
  InstitutionalState state;
};

struct AddProgramResult {
  std::shared_ptr<const ProgramRecord> program;  // null when the source has errors
  std::vector<Diagnostic> diagnostics;
};

/// Programs and sessions, optionally persisted under a directory:
/// `<dir>/<id>.json`, `<dir>/<id>.trace.json`, `<dir>/programs/<id>.dpcl`.
/// Operations on one session are serialized; distinct sessions proceed in
/// parallel. Everything on disk is reloaded on construction.
class SessionStore {
 public:
  explicit SessionStore(std::optional<std::filesystem::path> dir = std::nullopt);
  ~SessionStore();

  SessionStore(const SessionStore&) = delete;
  SessionStore& operator=(const SessionStore&) = delete;

  const std::optional<std::filesystem::path>& directory() const { return dir_; }

  AddProgramResult add_program(const std::string& source, const std::string& name = "<program>");
  /// Throws Error(unknown_program).
  std::shared_ptr<const ProgramRecord> program(const std::string& id) const;

  Session create_session(const std::string& program_id);
  Session fork_session(const std::string& id);
  /// Throws Error(unknown_session).
  Session session(const std::string& id) const;
  std::vector<std::string> session_ids() const;
  /// Ancestors of `id`, nearest first.
  std::vector<std::string> lineage(const std::string& id) const;

  /// Applies one step. On failure the session is unchanged and the error
  /// propagates.
  StepResult step(const std::string& id, const Step& step);
  Trace trace(const std::string& id) const;

  /// Session document: program source and state snapshot.
  Json session_document(const std::string& id) const;
  void save_session(const std::string& id, const std::filesystem::path& path) const;
  /// Registers the session read from `path` under its recorded id, replacing
  /// any session with that id. Throws version_mismatch / corrupt_payload.
  Session load_session(const std::filesystem::path& path);
  Session load_session_document(const Json& doc);

 private:
  struct Entry;

  std::shared_ptr<Entry> entry(const std::string& id) const;
  std::string fresh_id(char prefix);
  void persist(const Entry& e) const;
  void persist_program(const ProgramRecord& p) const;
  void reload();
  Session snapshot(const Entry& e) const;
  std::shared_ptr<const ProgramRecord> register_program(const std::string& id,
                                                        const std::string& source,
                                                        const std::string& name);

  std::optional<std::filesystem::path> dir_;
  mutable std::mutex mu_;
  std::map<std::string, std::shared_ptr<const ProgramRecord>> programs_;
  std::map<std::string, std::shared_ptr<Entry>> sessions_;
  std::mt19937_64 rng_;
};

/// Reads a whole file; throws Error(io).
std::string read_text_file(const std::filesystem::path& path);
/// Writes atomically via a temporary sibling; throws Error(io).
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace dpcl
