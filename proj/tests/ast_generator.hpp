#pragma once

// Random well-formed ASTs for round-trip properties.

#include <random>
#include <string>

#include "dpcl/ast.hpp"

namespace dpcl::testing {

class AstGenerator {
 public:
  explicit AstGenerator(std::uint32_t seed) : rng_(seed) {}

  Program program() {
    Program p;
    int compounds = pick(0, 2);
    for (int i = 0; i < compounds; ++i) {
      CompoundDecl c;
      c.name = "comp" + std::to_string(i);
      int params = pick(0, 3);
      for (int k = 0; k < params; ++k) c.params.push_back("p" + std::to_string(k));
      int members = pick(0, 3);
      for (int k = 0; k < members; ++k) {
        if (coin())
          c.members.push_back(frame(k));
        else
          c.members.push_back(rule());
      }
      p.declarations.push_back(std::move(c));
    }
    int decls = pick(0, 4);
    for (int i = 0; i < decls; ++i) {
      if (coin())
        p.declarations.push_back(frame(100 + i));
      else
        p.declarations.push_back(rule());
    }
    return p;
  }

  Term expr(int depth = 0) {
    int choice = depth > 2 ? pick(0, 4) : pick(0, 11);
    switch (choice) {
      case 0: return atom(ident());
      case 1: return dotted({ident(), ident()});
      case 2: return Term{DurationLiteral{Duration{pick(0, 40), unit()}}, {}};
      case 3: return Term{TimeValue{pick(0, 10000)}, {}};
      case 4: return now_call();
      case 5: return compare(expr(depth + 1), cmp_op(), expr(depth + 1));
      case 6:
        return Term{Arith{Box<Term>(expr(depth + 1)), coin() ? ArithOp::add : ArithOp::sub,
                          Box<Term>(expr(depth + 1))},
                    {}};
      case 7: return Term{Qualification{Box<Term>(expr(depth + 1)), ident()}, {}};
      case 8: {
        Alternation alt;
        int n = pick(2, 3);
        for (int i = 0; i < n; ++i) {
          Term o = expr(depth + 1);
          if (o.is<Alternation>()) o = atom(ident());
          alt.options.push_back(std::move(o));
        }
        return Term{std::move(alt), {}};
      }
      case 9: return event(ident(), fields(depth + 1, pick(0, 2)));
      case 10: return produce(coin() ? Polarity::create : Polarity::remove, target(depth + 1));
      default: return refined(ident(), fields(depth + 1, pick(0, 2)));
    }
  }

 private:
  int pick(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  bool coin() { return pick(0, 1) == 1; }

  std::string ident() {
    static const char* names[] = {"holder", "alice", "member", "book", "x", "item_2", "fooBar"};
    return names[pick(0, 6)];
  }

  DurationUnit unit() { return static_cast<DurationUnit>(pick(0, 6)); }
  CompareOp cmp_op() { return static_cast<CompareOp>(pick(0, 5)); }

  Term target(int depth) {
    switch (pick(0, 3)) {
      case 0: return atom(ident());
      case 1: return dotted({ident(), ident(), ident()});
      case 2: {
        CompoundCall call{ident(), {}};
        int n = pick(0, 2);
        for (int i = 0; i < n; ++i) call.args.push_back(expr(depth + 1));
        return Term{std::move(call), {}};
      }
      default: {
        if (coin()) return refined(ident(), fields(depth + 1, pick(0, 2)));
        Frame f = frame(0);
        f.label.reset();
        return frame_to_term(f);
      }
    }
  }

  Fields fields(int depth, int n) {
    static const char* names[] = {"a", "b", "c", "item", "target"};
    Fields out;
    for (int i = 0; i < n; ++i) out.push_back(field(names[i], expr(depth)));
    return out;
  }

  Frame frame(int index) {
    Frame f;
    f.kind = static_cast<FrameKind>(pick(0, 7));
    if (coin()) f.label = "f" + std::to_string(index);
    f.fields.push_back(field("holder", expr(1)));
    f.fields.push_back(field("action", event(ident(), fields(2, pick(0, 2)))));
    if (f.kind == FrameKind::power || coin()) f.fields.push_back(field("consequence", expr(1)));
    if (f.kind == FrameKind::duty || coin()) f.fields.push_back(field("counterparty", expr(1)));
    if (coin()) f.fields.push_back(field("violation", expr(1)));
    return f;
  }

  Rule rule() {
    Rule r;
    r.kind = coin() ? RuleKind::transformational : RuleKind::reactive;
    r.lhs = expr(0);
    r.rhs = expr(1);
    return r;
  }

  std::mt19937 rng_;
};

}  // namespace dpcl::testing
