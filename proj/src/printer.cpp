#include "dpcl/printer.hpp"

#include <sstream>

namespace dpcl {

namespace {

// Binding strength, loosest first; mirrors the parser's descent order.
enum Prec { kAlt = 1, kQual = 2, kCmp = 3, kArith = 4, kUnary = 5, kPrimary = 6 };

int precedence(const Term& t) {
  if (t.is<Alternation>()) return kAlt;
  if (t.is<Qualification>()) return kQual;
  if (t.is<Comparison>()) return kCmp;
  if (t.is<Arith>()) return kArith;
  if (t.is<Production>()) return kUnary;
  return kPrimary;
}

class Printer {
 public:
  explicit Printer(bool single_line) : single_line_(single_line) {}

  std::string str() const { return out_.str(); }

  void term(const Term& t, int min_prec = kAlt) {
    if (precedence(t) < min_prec) {
      out_ << '(';
      node(t);
      out_ << ')';
    } else {
      node(t);
    }
  }

  void frame(const Frame& f) {
    out_ << to_string(f.kind);
    if (f.label) out_ << ' ' << *f.label;
    out_ << ' ';
    body(f.fields, single_line_);
  }

  void rule(const Rule& r) {
    term(r.lhs);
    out_ << (r.kind == RuleKind::transformational ? " -> " : " => ");
    // Conclusions are parsed without binary operators.
    if (const auto* q = r.rhs.as<Qualification>()) {
      term(*q->subject, kUnary);
      out_ << " in " << q->descriptor;
    } else {
      term(r.rhs, kUnary);
    }
  }

  void compound(const CompoundDecl& c) {
    out_ << c.name << '(';
    for (std::size_t i = 0; i < c.params.size(); ++i) out_ << (i ? ", " : "") << c.params[i];
    out_ << ") {";
    if (c.members.empty()) {
      out_ << '}';
      return;
    }
    ++indent_;
    for (const Member& m : c.members) {
      newline();
      std::visit([this](const auto& v) { member(v); }, m);
    }
    --indent_;
    newline();
    out_ << '}';
  }

 private:
  void member(const Frame& f) { frame(f); }
  void member(const Rule& r) { rule(r); }

  void newline() {
    out_ << '\n';
    for (int i = 0; i < indent_; ++i) out_ << "    ";
  }

  void body(const Fields& fields, bool inline_form) {
    if (fields.empty()) {
      out_ << "{}";
      return;
    }
    if (inline_form) {
      out_ << "{ ";
      for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out_ << ", ";
        out_ << fields[i].name << ": ";
        bool saved = single_line_;
        single_line_ = true;
        term(fields[i].value);
        single_line_ = saved;
      }
      out_ << " }";
      return;
    }
    out_ << '{';
    ++indent_;
    for (const Field& f : fields) {
      newline();
      out_ << f.name << ": ";
      term(f.value);
    }
    --indent_;
    newline();
    out_ << '}';
  }

  void node(const Term& t) {
    std::visit([this](const auto& n) { emit(n); }, t.node);
  }

  void emit(const Atom& a) { out_ << a.name; }
  void emit(const DottedRef& d) {
    for (std::size_t i = 0; i < d.path.size(); ++i) out_ << (i ? "." : "") << d.path[i];
  }
  void emit(const CompoundCall& c) {
    out_ << c.name << '(';
    for (std::size_t i = 0; i < c.args.size(); ++i) {
      if (i) out_ << ", ";
      term(c.args[i]);
    }
    out_ << ')';
  }
  void emit(const RefinedObject& r) {
    out_ << r.head << ' ';
    body(r.fields, single_line_);
  }
  void emit(const Alternation& a) {
    for (std::size_t i = 0; i < a.options.size(); ++i) {
      if (i) out_ << " | ";
      term(a.options[i], kQual);
    }
  }
  void emit(const NowCall&) { out_ << "now()"; }
  void emit(const DurationLiteral& d) { out_ << to_string(d.value); }
  void emit(const TimeValue& v) { out_ << v.ticks; }
  void emit(const Comparison& c) {
    term(*c.lhs, kArith);
    out_ << ' ' << to_string(c.op) << ' ';
    term(*c.rhs, kArith);
  }
  void emit(const Arith& a) {
    term(*a.lhs, kArith);
    out_ << ' ' << to_string(a.op) << ' ';
    term(*a.rhs, kUnary);
  }
  void emit(const Qualification& q) {
    term(*q.subject, kCmp);
    out_ << " in " << q.descriptor;
  }
  void emit(const EventRef& e) {
    out_ << '#' << e.name;
    if (!e.refinements.empty()) {
      out_ << ' ';
      body(e.refinements, true);
    }
  }
  void emit(const Production& p) {
    out_ << (p.polarity == Polarity::create ? '+' : '-');
    term(*p.target, kPrimary);
  }

  std::ostringstream out_;
  bool single_line_;
  int indent_ = 0;
};

}  // namespace

std::string pretty_print(const Program& program) {
  std::string out;
  for (const Declaration& d : program.declarations) {
    if (!out.empty()) out += "\n";
    out += std::visit([](const auto& v) { return to_source(v); }, d);
    out += "\n";
  }
  return out;
}

std::string to_source(const Term& term, bool single_line) {
  Printer p(single_line);
  p.term(term);
  return p.str();
}

std::string to_source(const Frame& frame) {
  Printer p(false);
  p.frame(frame);
  return p.str();
}

std::string to_source(const Rule& rule) {
  Printer p(false);
  p.rule(rule);
  return p.str();
}

std::string to_source(const CompoundDecl& decl) {
  Printer p(false);
  p.compound(decl);
  return p.str();
}

}  // namespace dpcl
