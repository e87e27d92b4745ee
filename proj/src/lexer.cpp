#include <array>

#include "dpcl/parser.hpp"

namespace dpcl {

namespace {

constexpr std::array<std::string_view, 10> kKeywords{
    "power", "duty", "claim", "liability", "liberty", "disability", "no_claim", "immunity",
    "in",    "now"};

bool is_lower(char c) { return c >= 'a' && c <= 'z'; }
bool is_upper(char c) { return c >= 'A' && c <= 'Z'; }
bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_ident_char(char c) { return is_lower(c) || is_upper(c) || is_digit(c) || c == '_'; }

class Lexer {
 public:
  Lexer(std::string_view src, std::string_view file) : src_(src), file_(file) {}

  LexResult run() {
    LexResult out;
    while (true) {
      skip_trivia();
      if (pos_ >= src_.size()) break;
      lex_one(out);
    }
    return out;
  }

 private:
  char peek(std::size_t ahead = 0) const {
    return pos_ + ahead < src_.size() ? src_[pos_ + ahead] : '\0';
  }

  void advance() {
    if (src_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else if ((static_cast<unsigned char>(src_[pos_]) & 0xC0) != 0x80) {
      ++col_;
    }
    ++pos_;
  }

  void skip_trivia() {
    while (pos_ < src_.size()) {
      char c = peek();
      if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
        advance();
      } else if (c == '/' && peek(1) == '/') {
        while (pos_ < src_.size() && peek() != '\n') advance();
      } else {
        break;
      }
    }
  }

  SourceSpan span_from(int line, int col) const {
    // End column is inclusive: the last character of the token.
    return SourceSpan{std::string(file_), line, col, line_, col_ > 1 ? col_ - 1 : 1};
  }

  void push(LexResult& out, TokenKind kind, std::string text, int line, int col) {
    out.tokens.push_back(Token{kind, std::move(text), span_from(line, col)});
  }

  void error(LexResult& out, std::string code, std::string message, int line, int col) {
    out.diagnostics.push_back(
        Diagnostic{span_from(line, col), Severity::error, std::move(code), std::move(message)});
  }

  std::string take_ident() {
    std::size_t start = pos_;
    while (pos_ < src_.size() && is_ident_char(peek())) advance();
    return std::string(src_.substr(start, pos_ - start));
  }

  void lex_one(LexResult& out) {
    const int line = line_;
    const int col = col_;
    const char c = peek();

    if (is_lower(c)) {
      std::string text = take_ident();
      bool kw = false;
      for (auto k : kKeywords) kw = kw || k == text;
      push(out, kw ? TokenKind::keyword : TokenKind::identifier, std::move(text), line, col);
      return;
    }
    if (is_upper(c) || c == '_') {
      std::string text = take_ident();
      error(out, "bad-identifier", "identifier '" + text + "' must start with a lowercase letter",
            line, col);
      return;
    }
    if (is_digit(c)) {
      std::size_t start = pos_;
      while (is_digit(peek())) advance();
      std::size_t digits_end = pos_;
      while (is_lower(peek())) advance();
      std::string_view suffix = src_.substr(digits_end, pos_ - digits_end);
      bool trailing = is_ident_char(peek());
      while (is_ident_char(peek())) advance();
      std::string text(src_.substr(start, pos_ - start));
      if (trailing || (!suffix.empty() && !unit_from_suffix(suffix))) {
        error(out, "bad-literal", "malformed numeric literal '" + text + "'", line, col);
        return;
      }
      if (text.size() - suffix.size() > 18) {
        error(out, "bad-literal", "numeric literal '" + text + "' is too large", line, col);
        return;
      }
      push(out, suffix.empty() ? TokenKind::integer : TokenKind::duration, std::move(text), line,
           col);
      return;
    }
    if (c == '#') {
      advance();
      if (!is_lower(peek())) {
        error(out, "unterminated", "'#' must be directly followed by an event name", line, col);
        return;
      }
      push(out, TokenKind::event, take_ident(), line, col);
      return;
    }

    auto single = [&](TokenKind kind, std::size_t len) {
      std::string text(src_.substr(pos_, len));
      for (std::size_t i = 0; i < len; ++i) advance();
      push(out, kind, std::move(text), line, col);
    };

    switch (c) {
      case '{': return single(TokenKind::lbrace, 1);
      case '}': return single(TokenKind::rbrace, 1);
      case '(': return single(TokenKind::lparen, 1);
      case ')': return single(TokenKind::rparen, 1);
      case ':': return single(TokenKind::colon, 1);
      case ',': return single(TokenKind::comma, 1);
      case '|': return single(TokenKind::bar, 1);
      case '+': return single(TokenKind::plus, 1);
      case '.': return single(is_lower(peek(1)) ? TokenKind::dot : TokenKind::period, 1);
      case '-': return peek(1) == '>' ? single(TokenKind::arrow, 2) : single(TokenKind::minus, 1);
      case '=':
        if (peek(1) == '>') return single(TokenKind::reactive, 2);
        if (peek(1) == '=') return single(TokenKind::eq, 2);
        break;
      case '!':
        if (peek(1) == '=') return single(TokenKind::ne, 2);
        break;
      case '>': return peek(1) == '=' ? single(TokenKind::ge, 2) : single(TokenKind::gt, 1);
      case '<': return peek(1) == '=' ? single(TokenKind::le, 2) : single(TokenKind::lt, 1);
      default: break;
    }

    // Consume one whole UTF-8 code point so the message shows it intact.
    std::size_t start = pos_;
    advance();
    while (pos_ < src_.size() && (static_cast<unsigned char>(peek()) & 0xC0) == 0x80) advance();
    error(out, "unknown-char",
          "unexpected character '" + std::string(src_.substr(start, pos_ - start)) + "'", line,
          col);
  }

  std::string_view src_;
  std::string_view file_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

}  // namespace

std::string_view to_string(TokenKind kind) {
  switch (kind) {
    case TokenKind::identifier: return "identifier";
    case TokenKind::keyword: return "keyword";
    case TokenKind::event: return "event";
    case TokenKind::integer: return "integer";
    case TokenKind::duration: return "duration";
    case TokenKind::plus: return "'+'";
    case TokenKind::minus: return "'-'";
    case TokenKind::lbrace: return "'{'";
    case TokenKind::rbrace: return "'}'";
    case TokenKind::lparen: return "'('";
    case TokenKind::rparen: return "')'";
    case TokenKind::colon: return "':'";
    case TokenKind::comma: return "','";
    case TokenKind::dot: return "'.'";
    case TokenKind::period: return "end of statement '.'";
    case TokenKind::bar: return "'|'";
    case TokenKind::arrow: return "'->'";
    case TokenKind::reactive: return "'=>'";
    case TokenKind::gt: return "'>'";
    case TokenKind::ge: return "'>='";
    case TokenKind::lt: return "'<'";
    case TokenKind::le: return "'<='";
    case TokenKind::eq: return "'=='";
    case TokenKind::ne: return "'!='";
    case TokenKind::end: return "end of input";
  }
  return "?";
}

LexResult tokenize(std::string_view source, std::string_view file) {
  return Lexer(source, file).run();
}

std::string format_diagnostic(const Diagnostic& d) {
  return d.span.file + ":" + std::to_string(d.span.start_line) + ":" +
         std::to_string(d.span.start_col) + ": " +
         (d.severity == Severity::error ? "error" : "warning") + "[" + d.code + "]: " + d.message;
}

std::string format_diagnostics(const std::vector<Diagnostic>& ds) {
  std::string out;
  for (const auto& d : ds) out += format_diagnostic(d) + "\n";
  return out;
}

bool has_errors(const std::vector<Diagnostic>& ds) {
  for (const auto& d : ds)
    if (d.severity == Severity::error) return true;
  return false;
}

}  // namespace dpcl
