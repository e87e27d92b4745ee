#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dpcl/ast.hpp"

namespace dpcl {

enum class Severity { error, warning };

struct Diagnostic {
  SourceSpan span;
  Severity severity = Severity::error;
  std::string code;
  std::string message;
};

/// `file:line:col: severity[code]: message`
std::string format_diagnostic(const Diagnostic& d);
std::string format_diagnostics(const std::vector<Diagnostic>& ds);
bool has_errors(const std::vector<Diagnostic>& ds);

enum class TokenKind {
  identifier,
  keyword,
  event,        // #name; text holds the name without '#'
  integer,
  duration,     // text holds the literal, e.g. "1m"
  plus,
  minus,
  lbrace,
  rbrace,
  lparen,
  rparen,
  colon,
  comma,
  dot,          // member access, directly followed by an identifier
  period,       // statement terminator
  bar,
  arrow,        // ->
  reactive,     // =>
  gt,
  ge,
  lt,
  le,
  eq,
  ne,
  end,
};

std::string_view to_string(TokenKind kind);

struct Token {
  TokenKind kind = TokenKind::end;
  std::string text;
  SourceSpan span;

  friend bool operator==(const Token& a, const Token& b) {
    return a.kind == b.kind && a.text == b.text;
  }
};

struct LexResult {
  std::vector<Token> tokens;  // excludes the trailing end token
  std::vector<Diagnostic> diagnostics;
};

LexResult tokenize(std::string_view source, std::string_view file = "<input>");

struct ParseResult {
  std::optional<Program> program;
  std::vector<Diagnostic> diagnostics;
};

/// Parses DPCL source into a Program. Parsing recovers at closing braces so
/// independent errors are all reported. No name resolution happens here.
ParseResult parse(std::string_view source, std::string_view file = "<input>");

struct TermParseResult {
  std::optional<Term> term;
  std::vector<Diagnostic> diagnostics;
};

/// Parses a single expression; used for REPL event syntax, scenario
/// production targets and persisted frames.
TermParseResult parse_term(std::string_view source, std::string_view file = "<input>");

/// Name resolution and arity checks over a parsed program. Returns the
/// diagnostics found; the program is valid when none is an error.
std::vector<Diagnostic> validate(const Program& program);

/// parse followed by validate. The program is present only when neither step
/// reported an error; warnings are kept either way.
ParseResult parse_and_validate(std::string_view source, std::string_view file = "<input>");

}  // namespace dpcl
