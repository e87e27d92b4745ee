#include "dpcl/rewriter.hpp"

#include <functional>
#include <map>

#include "dpcl/error.hpp"

namespace dpcl {

namespace {

struct Transformation {
  std::function<bool(const Frame&)> applies;
  /// Replacement members for the frame at the site.
  std::function<std::vector<Member>(const Frame&)> apply;
};

bool violation_applies(const Frame& f) {
  return f.kind == FrameKind::duty && f.label && f.field("violation");
}

std::vector<Member> violation_apply(const Frame& duty) {
  const std::string& label = *duty.label;
  Frame kept = duty;
  Term condition = *duty.field("violation");
  std::erase_if(kept.fields, [](const Field& f) { return f.name == "violation"; });

  Frame power;
  power.kind = FrameKind::power;
  power.fields = {
      field("holder", dotted({label, "counterparty"})),
      field("action", event("declare_violation", {field("target", atom(label))})),
      field("consequence", produce(Polarity::create, dotted({label, "violation"}))),
  };
  Rule rule{RuleKind::transformational, std::move(condition), frame_to_term(power), {}};
  return {Member{std::move(kept)}, Member{std::move(rule)}};
}

const std::map<std::string, Transformation>& registry() {
  static const std::map<std::string, Transformation> r{
      {kViolationToPower, Transformation{violation_applies, violation_apply}},
  };
  return r;
}

const Transformation& lookup(const std::string& name) {
  auto it = registry().find(name);
  if (it == registry().end())
    throw Error(ErrorCode::unknown_transform, "unknown transformation '" + name + "'");
  return it->second;
}

struct Site {
  std::string path;
  std::size_t decl = 0;
  std::optional<std::size_t> member;  // set inside compounds
  const Frame* frame = nullptr;
};

std::vector<Site> labelled_frames(const Program& p) {
  std::vector<Site> out;
  for (std::size_t i = 0; i < p.declarations.size(); ++i) {
    const Declaration& d = p.declarations[i];
    if (const auto* f = std::get_if<Frame>(&d)) {
      if (f->label) out.push_back(Site{*f->label, i, std::nullopt, f});
    } else if (const auto* c = std::get_if<CompoundDecl>(&d)) {
      for (std::size_t m = 0; m < c->members.size(); ++m) {
        const auto* f = std::get_if<Frame>(&c->members[m]);
        if (f && f->label) out.push_back(Site{c->name + "/" + *f->label, i, m, f});
      }
    }
  }
  return out;
}

/// Exact path match first, then a bare label anywhere (first in source order).
const Site* find_site(const std::vector<Site>& sites, const std::string& path) {
  for (const Site& s : sites)
    if (s.path == path) return &s;
  if (path.find('/') == std::string::npos) {
    for (const Site& s : sites)
      if (s.frame->label == path) return &s;
  }
  return nullptr;
}

}  // namespace

std::vector<std::string> transformation_names() {
  std::vector<std::string> out;
  for (const auto& [name, t] : registry()) out.push_back(name);
  return out;
}

std::vector<std::string> list_applicable(const Program& program, const std::string& transform) {
  const Transformation& t = lookup(transform);
  std::vector<std::string> out;
  for (const Site& s : labelled_frames(program))
    if (t.applies(*s.frame)) out.push_back(s.path);
  return out;
}

Program apply_at(const Program& program, const std::string& transform, const std::string& path) {
  const Transformation& t = lookup(transform);
  auto sites = labelled_frames(program);
  const Site* site = find_site(sites, path);
  if (!site) throw Error(ErrorCode::label_not_found, "no labelled frame '" + path + "'");
  if (!t.applies(*site->frame))
    throw Error(ErrorCode::not_applicable,
                "'" + transform + "' does not apply to '" + site->path + "'");
  std::vector<Member> replacement = t.apply(*site->frame);

  Program out = program;
  if (!site->member) {
    std::vector<Declaration> decls;
    for (Member& m : replacement)
      decls.push_back(std::visit([](auto& x) { return Declaration{std::move(x)}; }, m));
    auto& ds = out.declarations;
    ds.erase(ds.begin() + static_cast<std::ptrdiff_t>(site->decl));
    ds.insert(ds.begin() + static_cast<std::ptrdiff_t>(site->decl), decls.begin(), decls.end());
  } else {
    auto& ms = std::get<CompoundDecl>(out.declarations[site->decl]).members;
    auto at = ms.begin() + static_cast<std::ptrdiff_t>(*site->member);
    at = ms.erase(at);
    ms.insert(at, replacement.begin(), replacement.end());
  }
  return out;
}

Program rewrite_violation_to_power(const Program& program, const std::string& duty) {
  return apply_at(program, kViolationToPower, duty);
}

RewriteResult apply_all(const Program& program, const std::string& transform) {
  RewriteResult r{program, list_applicable(program, transform)};
  for (const std::string& path : r.sites) r.program = apply_at(r.program, transform, path);
  return r;
}

}  // namespace dpcl
