#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "dpcl/duration.hpp"

namespace dpcl {

/// 1-based source location. Spans never take part in structural equality.
struct SourceSpan {
  std::string file;
  int start_line = 0;
  int start_col = 0;
  int end_line = 0;
  int end_col = 0;
};

/// Heap cell with value semantics, used to break recursion inside Term.
template <class T>
class Box {
 public:
  Box(T value) : ptr_(std::make_unique<T>(std::move(value))) {}
  Box(const Box& other) : ptr_(std::make_unique<T>(*other.ptr_)) {}
  Box(Box&&) noexcept = default;
  Box& operator=(const Box& other) {
    if (this != &other) ptr_ = std::make_unique<T>(*other.ptr_);
    return *this;
  }
  Box& operator=(Box&&) noexcept = default;

  const T& operator*() const { return *ptr_; }
  T& operator*() { return *ptr_; }
  const T* operator->() const { return ptr_.get(); }
  T* operator->() { return ptr_.get(); }

  friend bool operator==(const Box& a, const Box& b) { return *a.ptr_ == *b.ptr_; }

 private:
  std::unique_ptr<T> ptr_;
};

bool is_identifier(std::string_view name);

enum class FrameKind { power, duty, claim, liability, liberty, disability, no_claim, immunity };

std::string_view to_string(FrameKind kind);
std::optional<FrameKind> frame_kind_from(std::string_view keyword);

enum class CompareOp { gt, ge, lt, le, eq, ne };
enum class ArithOp { add, sub };
enum class Polarity { create, remove };

std::string_view to_string(CompareOp op);
std::string_view to_string(ArithOp op);

struct Term;

/// `name: value` entry of a refinement body. Field order is preserved for
/// printing but ignored by equality.
struct Field;
using Fields = std::vector<Field>;

bool fields_equal(const Fields& a, const Fields& b);
const Term* find_field(const Fields& fields, std::string_view name);

struct Atom {
  std::string name;
  friend bool operator==(const Atom&, const Atom&) = default;
};

/// `holder.id_card`, `d1.violation`; at least two segments.
struct DottedRef {
  std::vector<std::string> path;
  friend bool operator==(const DottedRef&, const DottedRef&) = default;
};

/// Positional compound instantiation, `fine(borrower, lender)`.
struct CompoundCall {
  std::string name;
  std::vector<Term> args;
  friend bool operator==(const CompoundCall&, const CompoundCall&);
};

/// `head { field: value ... }`. The head is either an identifier (object or
/// compound name) or a position keyword such as `power`.
struct RefinedObject {
  std::string head;
  Fields fields;
  friend bool operator==(const RefinedObject&, const RefinedObject&);
};

struct Alternation {
  std::vector<Term> options;
  friend bool operator==(const Alternation&, const Alternation&);
};

struct NowCall {
  friend bool operator==(const NowCall&, const NowCall&) = default;
};

struct DurationLiteral {
  Duration value;
  friend bool operator==(const DurationLiteral&, const DurationLiteral&) = default;
};

/// Bare integer literal, read as ticks.
struct TimeValue {
  Ticks ticks = 0;
  friend bool operator==(const TimeValue&, const TimeValue&) = default;
};

struct Comparison {
  Box<Term> lhs;
  CompareOp op;
  Box<Term> rhs;
  friend bool operator==(const Comparison&, const Comparison&);
};

struct Arith {
  Box<Term> lhs;
  ArithOp op;
  Box<Term> rhs;
  friend bool operator==(const Arith&, const Arith&);
};

/// `subject in descriptor`.
struct Qualification {
  Box<Term> subject;
  std::string descriptor;
  friend bool operator==(const Qualification&, const Qualification&);
};

/// `#name { refinements }`.
struct EventRef {
  std::string name;
  Fields refinements;
  friend bool operator==(const EventRef&, const EventRef&);
};

/// `+target` / `-target`.
struct Production {
  Polarity polarity = Polarity::create;
  Box<Term> target;
  friend bool operator==(const Production&, const Production&);
};

struct Term {
  using Node = std::variant<Atom, DottedRef, CompoundCall, RefinedObject, Alternation, NowCall,
                            DurationLiteral, TimeValue, Comparison, Arith, Qualification, EventRef,
                            Production>;

  Node node;
  SourceSpan span;

  template <class T>
  bool is() const {
    return std::holds_alternative<T>(node);
  }
  template <class T>
  const T* as() const {
    return std::get_if<T>(&node);
  }

  friend bool operator==(const Term& a, const Term& b) { return a.node == b.node; }
};

struct Field {
  std::string name;
  Term value;
  SourceSpan span;
};

// Convenience constructors, mostly for tests and the rewriter.
Term atom(std::string name);
Term dotted(std::vector<std::string> path);
Term event(std::string name, Fields refinements = {});
Term produce(Polarity polarity, Term target);
Term refined(std::string head, Fields fields);
Term compare(Term lhs, CompareOp op, Term rhs);
Term now_call();
Field field(std::string name, Term value);

/// Position frame declared as a program or compound member
/// (`power { ... }`, `duty d1 { ... }`).
struct Frame {
  FrameKind kind = FrameKind::power;
  std::optional<std::string> label;
  Fields fields;
  SourceSpan span;

  const Term* field(std::string_view name) const { return find_field(fields, name); }

  friend bool operator==(const Frame& a, const Frame& b) {
    return a.kind == b.kind && a.label == b.label && fields_equal(a.fields, b.fields);
  }
};

/// Required fields per position kind; other positions have none.
std::vector<std::string_view> required_fields(FrameKind kind);

/// Frame viewed as a term: RefinedObject with a keyword head. The label is
/// dropped.
Term frame_to_term(const Frame& frame);
/// Inverse of frame_to_term; nullopt when the term is not a frame.
std::optional<Frame> term_to_frame(const Term& term);

enum class RuleKind { transformational, reactive };

/// `condition -> conclusion` or `trigger => effect`.
struct Rule {
  RuleKind kind = RuleKind::transformational;
  Term lhs;
  Term rhs;
  SourceSpan span;

  friend bool operator==(const Rule& a, const Rule& b) {
    return a.kind == b.kind && a.lhs == b.lhs && a.rhs == b.rhs;
  }
};

using Member = std::variant<Frame, Rule>;

struct CompoundDecl {
  std::string name;
  std::vector<std::string> params;
  std::vector<Member> members;
  SourceSpan span;

  friend bool operator==(const CompoundDecl& a, const CompoundDecl& b) {
    return a.name == b.name && a.params == b.params && a.members == b.members;
  }
};

using Declaration = std::variant<Frame, Rule, CompoundDecl>;

struct Program {
  std::vector<Declaration> declarations;
  std::string source_name;

  const CompoundDecl* find_compound(std::string_view name) const;

  /// Structural equality; the source name is not part of the structure.
  friend bool operator==(const Program& a, const Program& b) {
    return a.declarations == b.declarations;
  }
};

}  // namespace dpcl
