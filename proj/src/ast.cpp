#include "dpcl/ast.hpp"

#include <algorithm>
#include <array>

namespace dpcl {

namespace {

constexpr std::array<std::pair<std::string_view, FrameKind>, 8> kFrameKeywords{{
    {"power", FrameKind::power},
    {"duty", FrameKind::duty},
    {"claim", FrameKind::claim},
    {"liability", FrameKind::liability},
    {"liberty", FrameKind::liberty},
    {"disability", FrameKind::disability},
    {"no_claim", FrameKind::no_claim},
    {"immunity", FrameKind::immunity},
}};

}  // namespace

bool is_identifier(std::string_view name) {
  if (name.empty() || name.front() < 'a' || name.front() > 'z') return false;
  return std::all_of(name.begin(), name.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_';
  });
}

std::string_view to_string(FrameKind kind) {
  for (const auto& [kw, k] : kFrameKeywords)
    if (k == kind) return kw;
  return "";
}

std::optional<FrameKind> frame_kind_from(std::string_view keyword) {
  for (const auto& [kw, k] : kFrameKeywords)
    if (kw == keyword) return k;
  return std::nullopt;
}

std::string_view to_string(CompareOp op) {
  switch (op) {
    case CompareOp::gt: return ">";
    case CompareOp::ge: return ">=";
    case CompareOp::lt: return "<";
    case CompareOp::le: return "<=";
    case CompareOp::eq: return "==";
    case CompareOp::ne: return "!=";
  }
  return "";
}

std::string_view to_string(ArithOp op) { return op == ArithOp::add ? "+" : "-"; }

bool fields_equal(const Fields& a, const Fields& b) {
  if (a.size() != b.size()) return false;
  for (const Field& f : a) {
    const Term* other = find_field(b, f.name);
    if (!other || !(*other == f.value)) return false;
  }
  return true;
}

const Term* find_field(const Fields& fields, std::string_view name) {
  for (const Field& f : fields)
    if (f.name == name) return &f.value;
  return nullptr;
}

bool operator==(const CompoundCall& a, const CompoundCall& b) {
  return a.name == b.name && a.args == b.args;
}
bool operator==(const RefinedObject& a, const RefinedObject& b) {
  return a.head == b.head && fields_equal(a.fields, b.fields);
}
bool operator==(const Alternation& a, const Alternation& b) { return a.options == b.options; }
bool operator==(const Comparison& a, const Comparison& b) {
  return a.op == b.op && a.lhs == b.lhs && a.rhs == b.rhs;
}
bool operator==(const Arith& a, const Arith& b) {
  return a.op == b.op && a.lhs == b.lhs && a.rhs == b.rhs;
}
bool operator==(const Qualification& a, const Qualification& b) {
  return a.descriptor == b.descriptor && a.subject == b.subject;
}
bool operator==(const EventRef& a, const EventRef& b) {
  return a.name == b.name && fields_equal(a.refinements, b.refinements);
}
bool operator==(const Production& a, const Production& b) {
  return a.polarity == b.polarity && a.target == b.target;
}

Term atom(std::string name) { return Term{Atom{std::move(name)}, {}}; }
Term dotted(std::vector<std::string> path) { return Term{DottedRef{std::move(path)}, {}}; }
Term event(std::string name, Fields refinements) {
  return Term{EventRef{std::move(name), std::move(refinements)}, {}};
}
Term produce(Polarity polarity, Term target) {
  return Term{Production{polarity, Box<Term>(std::move(target))}, {}};
}
Term refined(std::string head, Fields fields) {
  return Term{RefinedObject{std::move(head), std::move(fields)}, {}};
}
Term compare(Term lhs, CompareOp op, Term rhs) {
  return Term{Comparison{Box<Term>(std::move(lhs)), op, Box<Term>(std::move(rhs))}, {}};
}
Term now_call() { return Term{NowCall{}, {}}; }
Field field(std::string name, Term value) { return Field{std::move(name), std::move(value), {}}; }

std::vector<std::string_view> required_fields(FrameKind kind) {
  switch (kind) {
    case FrameKind::power: return {"holder", "action", "consequence"};
    case FrameKind::duty: return {"holder", "counterparty", "action"};
    default: return {};
  }
}

Term frame_to_term(const Frame& frame) {
  return Term{RefinedObject{std::string(to_string(frame.kind)), frame.fields}, frame.span};
}

std::optional<Frame> term_to_frame(const Term& term) {
  const auto* obj = term.as<RefinedObject>();
  if (!obj) return std::nullopt;
  auto kind = frame_kind_from(obj->head);
  if (!kind) return std::nullopt;
  return Frame{*kind, std::nullopt, obj->fields, term.span};
}

const CompoundDecl* Program::find_compound(std::string_view name) const {
  for (const Declaration& d : declarations)
    if (const auto* c = std::get_if<CompoundDecl>(&d); c && c->name == name) return c;
  return nullptr;
}

}  // namespace dpcl
