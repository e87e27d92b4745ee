#include <algorithm>
#include <map>
#include <set>

#include "dpcl/parser.hpp"
#include "dpcl/printer.hpp"

namespace dpcl {

namespace {

class Validator {
 public:
  explicit Validator(const Program& program) : program_(program) {
    for (const Declaration& d : program.declarations) {
      if (const auto* c = std::get_if<CompoundDecl>(&d)) {
        if (!compounds_.emplace(c->name, c).second)
          error(c->span, "duplicate-decl", "compound '" + c->name + "' is declared more than once");
      } else if (const auto* f = std::get_if<Frame>(&d); f && f->label) {
        if (!global_labels_.insert(*f->label).second)
          error(f->span, "duplicate-decl", "frame label '" + *f->label + "' is already used");
      }
    }
  }

  std::vector<Diagnostic> run() {
    for (const Declaration& d : program_.declarations) {
      if (const auto* f = std::get_if<Frame>(&d)) {
        Scope scope{global_labels_, {}};
        check_frame(*f, scope);
      } else if (const auto* r = std::get_if<Rule>(&d)) {
        Scope scope{global_labels_, {}};
        check_rule(*r, scope);
      } else {
        check_compound(std::get<CompoundDecl>(d));
      }
    }
    return std::move(diags_);
  }

 private:
  struct Scope {
    std::set<std::string> names;
    std::vector<std::set<std::string>> frame_fields;

    bool resolves(const std::string& head) const {
      if (names.count(head)) return true;
      for (const auto& fs : frame_fields)
        if (fs.count(head)) return true;
      return false;
    }
  };

  void error(const SourceSpan& span, std::string code, std::string message) {
    diags_.push_back(Diagnostic{span, Severity::error, std::move(code), std::move(message)});
  }

  void check_compound(const CompoundDecl& c) {
    Scope scope{global_labels_, {}};
    for (const auto& p : c.params) scope.names.insert(p);
    std::set<std::string> labels;
    for (const Member& m : c.members) {
      const auto* f = std::get_if<Frame>(&m);
      if (!f || !f->label) continue;
      if (!labels.insert(*f->label).second ||
          std::count(c.params.begin(), c.params.end(), *f->label))
        error(f->span, "duplicate-decl",
              "label '" + *f->label + "' is already used in compound '" + c.name + "'");
      scope.names.insert(*f->label);
    }
    for (const Member& m : c.members) {
      if (const auto* f = std::get_if<Frame>(&m)) {
        check_frame(*f, scope);
      } else {
        check_rule(std::get<Rule>(m), scope);
      }
    }
  }

  void check_frame(const Frame& f, Scope& scope) {
    if (f.kind != FrameKind::power && f.kind != FrameKind::duty) {
      diags_.push_back(Diagnostic{
          f.span, Severity::warning, "no-semantics",
          std::string(to_string(f.kind)) + " positions are recorded but drive no execution"});
    }
    check_fields(f.fields, scope);
  }

  void check_fields(const Fields& fields, Scope& scope) {
    std::set<std::string> names;
    for (const Field& fl : fields) names.insert(fl.name);
    scope.frame_fields.push_back(std::move(names));
    for (const Field& fl : fields) check_term(fl.value, scope);
    scope.frame_fields.pop_back();
  }

  void check_rule(const Rule& r, Scope& scope) {
    if (r.kind == RuleKind::transformational) {
      check_term(r.lhs, scope);
      const Term& c = r.rhs;
      const auto* p = c.as<Production>();
      bool ok = c.is<Atom>() || c.is<RefinedObject>() || c.is<CompoundCall>() ||
                c.is<Qualification>() || (p && p->polarity == Polarity::create);
      if (!ok)
        error(c.span, "bad-conclusion",
              "a transformational conclusion must be an object, compound, frame or qualification");
    } else {
      if (!r.lhs.is<EventRef>() && !r.lhs.is<Production>())
        error(r.lhs.span, "bad-trigger", "a reactive trigger must be an event or a production");
      check_term(r.lhs, scope);
      const Term& e = r.rhs;
      bool frame = term_to_frame(e).has_value();
      if (!e.is<Production>() && !e.is<EventRef>() && !e.is<Qualification>() && !frame)
        error(e.span, "bad-effect",
              "a reactive effect must be an event, a production or a frame instantiation");
    }
    check_term(r.rhs, scope);
  }

  void check_compound_fields(const RefinedObject& obj, const CompoundDecl& decl,
                             const SourceSpan& span) {
    for (const auto& p : decl.params) {
      if (!find_field(obj.fields, p))
        error(span, "arity",
              "instantiation of '" + decl.name + "' is missing parameter '" + p + "'");
    }
    for (const Field& f : obj.fields) {
      if (std::find(decl.params.begin(), decl.params.end(), f.name) == decl.params.end())
        error(f.span, "arity", "'" + decl.name + "' has no parameter '" + f.name + "'");
    }
  }

  void check_term(const Term& t, Scope& scope) {
    std::visit([&](const auto& n) { check_node(n, t, scope); }, t.node);
  }

  void check_node(const Atom&, const Term&, Scope&) {}
  void check_node(const NowCall&, const Term&, Scope&) {}
  void check_node(const DurationLiteral&, const Term&, Scope&) {}
  void check_node(const TimeValue&, const Term&, Scope&) {}

  void check_node(const DottedRef& d, const Term& t, Scope& scope) {
    if (!scope.resolves(d.path.front()))
      error(t.span, "unresolved-name",
            "'" + d.path.front() + "' in '" + to_source(t) +
                "' is not a parameter, label or frame field in scope");
  }

  void check_node(const CompoundCall& c, const Term& t, Scope& scope) {
    auto it = compounds_.find(c.name);
    if (it == compounds_.end()) {
      error(t.span, "undeclared-compound", "compound '" + c.name + "' is not declared");
    } else if (it->second->params.size() != c.args.size()) {
      error(t.span, "arity",
            "compound '" + c.name + "' takes " + std::to_string(it->second->params.size()) +
                " argument(s), " + std::to_string(c.args.size()) + " given");
    }
    for (const Term& a : c.args) check_term(a, scope);
  }

  void check_node(const RefinedObject& r, const Term& t, Scope& scope) {
    if (frame_kind_from(r.head)) {
      check_fields(r.fields, scope);
      return;
    }
    if (auto it = compounds_.find(r.head); it != compounds_.end())
      check_compound_fields(r, *it->second, t.span);
    for (const Field& f : r.fields) check_term(f.value, scope);
  }

  void check_node(const Alternation& a, const Term&, Scope& scope) {
    for (const Term& o : a.options) check_term(o, scope);
  }
  void check_node(const Comparison& c, const Term&, Scope& scope) {
    check_term(*c.lhs, scope);
    check_term(*c.rhs, scope);
  }
  void check_node(const Arith& a, const Term&, Scope& scope) {
    check_term(*a.lhs, scope);
    check_term(*a.rhs, scope);
  }
  void check_node(const Qualification& q, const Term&, Scope& scope) {
    check_term(*q.subject, scope);
  }
  void check_node(const EventRef& e, const Term&, Scope& scope) {
    for (const Field& f : e.refinements) check_term(f.value, scope);
  }
  void check_node(const Production& p, const Term&, Scope& scope) {
    const Term& target = *p.target;
    if (const auto* a = target.as<Atom>(); a && p.polarity == Polarity::create) {
      if (auto it = compounds_.find(a->name); it != compounds_.end() && !it->second->params.empty())
        error(target.span, "arity",
              "compound '" + a->name + "' takes " + std::to_string(it->second->params.size()) +
                  " argument(s), 0 given");
    }
    check_term(target, scope);
  }

  const Program& program_;
  std::map<std::string, const CompoundDecl*> compounds_;
  std::set<std::string> global_labels_;
  std::vector<Diagnostic> diags_;
};

}  // namespace

std::vector<Diagnostic> validate(const Program& program) { return Validator(program).run(); }

}  // namespace dpcl
