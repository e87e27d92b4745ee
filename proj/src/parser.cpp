#include <charconv>
#include <set>

#include "dpcl/parser.hpp"

namespace dpcl {

namespace {

struct Abort {};

class Parser {
 public:
  Parser(std::vector<Token> tokens, std::string_view file, std::vector<Diagnostic>& diags)
      : toks_(std::move(tokens)), file_(file), diags_(diags) {
    Token end;
    end.kind = TokenKind::end;
    end.span = toks_.empty() ? SourceSpan{std::string(file), 1, 1, 1, 1} : toks_.back().span;
    if (!toks_.empty()) {
      end.span.start_line = end.span.end_line;
      end.span.start_col = end.span.end_col + 1;
      end.span.end_col = end.span.start_col;
    }
    toks_.push_back(std::move(end));
  }

  Program parse_program() {
    Program program;
    program.source_name = std::string(file_);
    while (!at(TokenKind::end)) {
      const int start_depth = depth_;
      const std::size_t start_pos = pos_;
      try {
        if (auto d = parse_declaration()) program.declarations.push_back(std::move(*d));
      } catch (const Abort&) {
        synchronize(start_depth, start_pos);
      }
    }
    return program;
  }

  std::optional<Term> parse_single_term() {
    try {
      Term t = parse_expr();
      if (!at(TokenKind::end)) fail(peek(), "unexpected-token", "unexpected " + describe(peek()));
      return t;
    } catch (const Abort&) {
      return std::nullopt;
    }
  }

 private:
  // ---- token plumbing ------------------------------------------------------

  const Token& peek(std::size_t ahead = 0) const {
    return toks_[std::min(pos_ + ahead, toks_.size() - 1)];
  }
  bool at(TokenKind kind, std::size_t ahead = 0) const { return peek(ahead).kind == kind; }
  bool at_keyword(std::string_view kw) const {
    return at(TokenKind::keyword) && peek().text == kw;
  }

  const Token& take() {
    const Token& t = toks_[pos_];
    if (t.kind == TokenKind::lbrace) ++depth_;
    if (t.kind == TokenKind::rbrace) --depth_;
    if (pos_ + 1 < toks_.size()) ++pos_;
    return t;
  }

  bool accept(TokenKind kind) {
    if (!at(kind)) return false;
    take();
    return true;
  }

  const Token& expect(TokenKind kind, std::string_view what) {
    if (!at(kind))
      fail(peek(), "unexpected-token",
           "expected " + std::string(what) + ", found " + describe(peek()));
    return take();
  }

  static std::string describe(const Token& t) {
    switch (t.kind) {
      case TokenKind::identifier: return "identifier '" + t.text + "'";
      case TokenKind::keyword: return "keyword '" + t.text + "'";
      case TokenKind::event: return "event '#" + t.text + "'";
      case TokenKind::integer:
      case TokenKind::duration: return "literal '" + t.text + "'";
      default: return std::string(to_string(t.kind));
    }
  }

  void report(const SourceSpan& span, std::string code, std::string message,
              Severity sev = Severity::error) {
    diags_.push_back(Diagnostic{span, sev, std::move(code), std::move(message)});
  }

  [[noreturn]] void fail(const Token& at_tok, std::string code, std::string message) {
    report(at_tok.span, std::move(code), std::move(message));
    throw Abort{};
  }

  SourceSpan span_between(const SourceSpan& a, const SourceSpan& b) const {
    return SourceSpan{a.file, a.start_line, a.start_col, b.end_line, b.end_col};
  }
  // `name(` with no whitespace in between; a detached '(' starts a new expression.
  static bool adjacent(const Token& a, const Token& b) {
    return a.span.end_line == b.span.start_line && a.span.end_col + 1 == b.span.start_col;
  }

  const SourceSpan& last_span() const { return toks_[pos_ > 0 ? pos_ - 1 : 0].span; }

  // Skip to a point where a fresh declaration can start: past the brace that
  // closes the broken construct, or onto the next line at the same depth.
  void synchronize(int start_depth, std::size_t start_pos) {
    if (pos_ == start_pos) take();
    const int error_line = peek().span.start_line;
    while (!at(TokenKind::end)) {
      if (depth_ > start_depth) {
        take();
        continue;
      }
      if (depth_ < start_depth) return;
      if (pos_ > 0 && toks_[pos_ - 1].kind == TokenKind::rbrace && depth_ == start_depth) return;
      if (peek().span.start_line > error_line) return;
      take();
    }
  }

  // ---- declarations --------------------------------------------------------

  std::optional<Declaration> parse_declaration() {
    if (at(TokenKind::keyword) && frame_kind_from(peek().text)) return parse_frame_decl();
    if (at(TokenKind::identifier) && at(TokenKind::lparen, 1) && looks_like_compound_decl())
      return parse_compound_decl();
    if (at(TokenKind::rbrace)) fail(peek(), "unexpected-token", "unmatched '}'");
    return parse_rule();
  }

  // `name ( ident, ... ) {` with only identifiers between the parentheses.
  bool looks_like_compound_decl() const {
    std::size_t i = 2;
    if (peek(i).kind == TokenKind::rparen) return peek(i + 1).kind == TokenKind::lbrace;
    while (true) {
      if (peek(i).kind != TokenKind::identifier) return false;
      ++i;
      if (peek(i).kind == TokenKind::comma) {
        ++i;
        continue;
      }
      if (peek(i).kind != TokenKind::rparen) return false;
      return peek(i + 1).kind == TokenKind::lbrace;
    }
  }

  Frame parse_frame_decl() {
    const Token& kw = take();
    Frame frame;
    frame.kind = *frame_kind_from(kw.text);
    if (at(TokenKind::identifier)) frame.label = take().text;
    frame.fields = parse_body();
    frame.span = span_between(kw.span, last_span());
    check_frame(frame.kind, frame.fields, frame.span);
    return frame;
  }

  CompoundDecl parse_compound_decl() {
    const Token& name = take();
    CompoundDecl decl;
    decl.name = name.text;
    expect(TokenKind::lparen, "'('");
    std::set<std::string> seen;
    if (!at(TokenKind::rparen)) {
      do {
        const Token& p = expect(TokenKind::identifier, "parameter name");
        if (!seen.insert(p.text).second)
          report(p.span, "duplicate-param", "duplicate parameter '" + p.text + "'");
        decl.params.push_back(p.text);
      } while (accept(TokenKind::comma));
    }
    expect(TokenKind::rparen, "')'");
    expect(TokenKind::lbrace, "'{'");
    const int member_depth = depth_;
    while (!at(TokenKind::rbrace) && !at(TokenKind::end)) {
      const std::size_t start_pos = pos_;
      try {
        decl.members.push_back(parse_member());
      } catch (const Abort&) {
        synchronize(member_depth, start_pos);
      }
    }
    expect(TokenKind::rbrace, "'}' closing compound '" + decl.name + "'");
    decl.span = span_between(name.span, last_span());
    return decl;
  }

  Member parse_member() {
    if (at(TokenKind::keyword) && frame_kind_from(peek().text)) return parse_frame_decl();
    if (at(TokenKind::identifier) && at(TokenKind::lparen, 1) && looks_like_compound_decl())
      fail(peek(), "nested-compound", "compound declarations cannot be nested");
    return parse_rule();
  }

  Rule parse_rule() {
    const Token& first = peek();
    auto unknown_keyword = [&] {
      fail(first, "unknown-keyword",
           "unknown keyword '" + first.text + "' at declaration position");
    };
    // `name label {` or `name {` with no rule arrow is a misspelt frame keyword.
    const bool ident_start = first.kind == TokenKind::identifier;
    if (ident_start && at(TokenKind::identifier, 1)) unknown_keyword();
    const bool braced = ident_start && at(TokenKind::lbrace, 1);
    Rule rule;
    rule.lhs = parse_expr();
    if (accept(TokenKind::arrow)) {
      rule.kind = RuleKind::transformational;
    } else if (accept(TokenKind::reactive)) {
      rule.kind = RuleKind::reactive;
    } else if (braced && rule.lhs.is<RefinedObject>()) {
      unknown_keyword();
    } else {
      fail(peek(), "unexpected-token",
           "expected '->' or '=>' after rule condition, found " + describe(peek()));
    }
    rule.rhs = parse_conclusion();
    rule.span = span_between(first.span, last_span());
    accept(TokenKind::period);
    return rule;
  }

  // Rule right-hand sides stop before binary operators so that consecutive
  // rules need no terminator.
  Term parse_conclusion() {
    Term t = parse_unary();
    if (at_keyword("in")) return parse_in(std::move(t));
    return t;
  }

  // ---- bodies ---------------------------------------------------------------

  Fields parse_body() {
    expect(TokenKind::lbrace, "'{'");
    Fields fields;
    while (!at(TokenKind::rbrace)) {
      if (at(TokenKind::end)) fail(peek(), "unterminated", "unterminated '{' block");
      const Token& name = peek();
      if (name.kind != TokenKind::identifier)
        fail(name, "unexpected-token", "expected field name, found " + describe(name));
      take();
      expect(TokenKind::colon, "':' after field '" + name.text + "'");
      Term value = parse_expr();
      if (find_field(fields, name.text)) {
        report(name.span, "duplicate-field", "duplicate field '" + name.text + "'");
      } else {
        fields.push_back(Field{name.text, std::move(value), name.span});
      }
      accept(TokenKind::comma);
    }
    take();
    return fields;
  }

  void check_frame(FrameKind kind, const Fields& fields, const SourceSpan& span) {
    for (std::string_view required : required_fields(kind)) {
      if (!find_field(fields, required))
        report(span, "missing-field",
               std::string(to_string(kind)) + " frame is missing required field '" +
                   std::string(required) + "'");
    }
    if (kind == FrameKind::power || kind == FrameKind::duty) {
      for (const Field& f : fields) {
        if (f.name == "action" && !f.value.is<EventRef>())
          report(f.span, "bad-field", "field 'action' must be an event such as #act");
      }
    }
  }

  // ---- expressions -----------------------------------------------------------

  Term parse_expr() {
    Term first = parse_qual();
    if (!at(TokenKind::bar)) return first;
    Alternation alt;
    auto push = [&](Term t) {
      if (auto* inner = std::get_if<Alternation>(&t.node)) {
        for (auto& o : inner->options) alt.options.push_back(std::move(o));
      } else {
        alt.options.push_back(std::move(t));
      }
    };
    SourceSpan start = first.span;
    push(std::move(first));
    while (accept(TokenKind::bar)) push(parse_qual());
    return Term{std::move(alt), span_between(start, last_span())};
  }

  Term parse_in(Term subject) {
    take();
    const Token& d = expect(TokenKind::identifier, "descriptor name after 'in'");
    SourceSpan span = span_between(subject.span, d.span);
    return Term{Qualification{Box<Term>(std::move(subject)), d.text}, span};
  }

  Term parse_qual() {
    Term t = parse_cmp();
    if (at_keyword("in")) return parse_in(std::move(t));
    return t;
  }

  Term parse_cmp() {
    Term lhs = parse_arith();
    std::optional<CompareOp> op;
    switch (peek().kind) {
      case TokenKind::gt: op = CompareOp::gt; break;
      case TokenKind::ge: op = CompareOp::ge; break;
      case TokenKind::lt: op = CompareOp::lt; break;
      case TokenKind::le: op = CompareOp::le; break;
      case TokenKind::eq: op = CompareOp::eq; break;
      case TokenKind::ne: op = CompareOp::ne; break;
      default: return lhs;
    }
    take();
    Term rhs = parse_arith();
    SourceSpan span = span_between(lhs.span, rhs.span);
    return Term{Comparison{Box<Term>(std::move(lhs)), *op, Box<Term>(std::move(rhs))}, span};
  }

  Term parse_arith() {
    Term lhs = parse_unary();
    while (at(TokenKind::plus) || at(TokenKind::minus)) {
      ArithOp op = take().kind == TokenKind::plus ? ArithOp::add : ArithOp::sub;
      Term rhs = parse_unary();
      SourceSpan span = span_between(lhs.span, rhs.span);
      lhs = Term{Arith{Box<Term>(std::move(lhs)), op, Box<Term>(std::move(rhs))}, span};
    }
    return lhs;
  }

  Term parse_unary() {
    if (at(TokenKind::plus) || at(TokenKind::minus)) {
      const Token& sign = take();
      Term target = parse_primary();
      if (!(target.is<Atom>() || target.is<DottedRef>() || target.is<CompoundCall>() ||
            target.is<RefinedObject>())) {
        report(target.span, "bad-production",
               "production target must be an object, compound instance or flag");
        throw Abort{};
      }
      SourceSpan span = span_between(sign.span, target.span);
      Polarity pol = sign.kind == TokenKind::plus ? Polarity::create : Polarity::remove;
      return Term{Production{pol, Box<Term>(std::move(target))}, span};
    }
    return parse_primary();
  }

  Term parse_primary() {
    const Token& t = peek();
    switch (t.kind) {
      case TokenKind::event: {
        take();
        EventRef ev{t.text, {}};
        if (at(TokenKind::lbrace)) ev.refinements = parse_body();
        return Term{std::move(ev), span_between(t.span, last_span())};
      }
      case TokenKind::integer: {
        take();
        Ticks v = 0;
        std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
        return Term{TimeValue{v}, t.span};
      }
      case TokenKind::duration: {
        take();
        return Term{DurationLiteral{*parse_duration(t.text)}, t.span};
      }
      case TokenKind::lparen: {
        take();
        Term inner = parse_expr();
        expect(TokenKind::rparen, "')'");
        return inner;
      }
      case TokenKind::keyword: {
        if (t.text == "now") {
          take();
          expect(TokenKind::lparen, "'(' after now");
          expect(TokenKind::rparen, "')' after now(");
          return Term{NowCall{}, span_between(t.span, last_span())};
        }
        if (auto kind = frame_kind_from(t.text)) {
          take();
          if (at(TokenKind::identifier))
            fail(peek(), "unexpected-token", "labels are only allowed on declared frames");
          Fields fields = parse_body();
          SourceSpan span = span_between(t.span, last_span());
          check_frame(*kind, fields, span);
          return Term{RefinedObject{t.text, std::move(fields)}, span};
        }
        fail(t, "unexpected-token", "unexpected " + describe(t));
      }
      case TokenKind::identifier: {
        take();
        if (at(TokenKind::dot)) {
          DottedRef ref{{t.text}};
          while (accept(TokenKind::dot))
            ref.path.push_back(expect(TokenKind::identifier, "field name after '.'").text);
          return Term{std::move(ref), span_between(t.span, last_span())};
        }
        if (at(TokenKind::lparen) && adjacent(t, peek())) {
          take();
          CompoundCall call{t.text, {}};
          if (!at(TokenKind::rparen)) {
            do {
              call.args.push_back(parse_expr());
            } while (accept(TokenKind::comma));
          }
          expect(TokenKind::rparen, "')'");
          return Term{std::move(call), span_between(t.span, last_span())};
        }
        if (at(TokenKind::lbrace)) {
          Fields fields = parse_body();
          return Term{RefinedObject{t.text, std::move(fields)}, span_between(t.span, last_span())};
        }
        return Term{Atom{t.text}, t.span};
      }
      case TokenKind::end: fail(t, "unterminated", "unexpected end of input");
      default: fail(t, "unexpected-token", "unexpected " + describe(t));
    }
  }

  std::vector<Token> toks_;
  std::string_view file_;
  std::vector<Diagnostic>& diags_;
  std::size_t pos_ = 0;
  int depth_ = 0;
};

}  // namespace

ParseResult parse(std::string_view source, std::string_view file) {
  ParseResult result;
  LexResult lexed = tokenize(source, file);
  result.diagnostics = std::move(lexed.diagnostics);
  Parser parser(std::move(lexed.tokens), file, result.diagnostics);
  Program program = parser.parse_program();
  if (!has_errors(result.diagnostics)) result.program = std::move(program);
  return result;
}

TermParseResult parse_term(std::string_view source, std::string_view file) {
  TermParseResult result;
  LexResult lexed = tokenize(source, file);
  result.diagnostics = std::move(lexed.diagnostics);
  if (has_errors(result.diagnostics)) return result;
  Parser parser(std::move(lexed.tokens), file, result.diagnostics);
  auto term = parser.parse_single_term();
  if (!has_errors(result.diagnostics)) result.term = std::move(term);
  return result;
}

ParseResult parse_and_validate(std::string_view source, std::string_view file) {
  ParseResult result = parse(source, file);
  if (!result.program) return result;
  auto more = validate(*result.program);
  result.diagnostics.insert(result.diagnostics.end(), more.begin(), more.end());
  if (has_errors(result.diagnostics)) result.program.reset();
  return result;
}

}  // namespace dpcl
