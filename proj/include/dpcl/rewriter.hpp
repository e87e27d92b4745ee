#pragma once

#include <string>
#include <vector>

#include "dpcl/ast.hpp"

namespace dpcl {

/// Name of the deontic-to-potestative rewrite.
inline constexpr const char* kViolationToPower = "violation-to-power";

/// Registered transformation names, sorted.
std::vector<std::string> transformation_names();

/// Node paths where `transform` applies, in source order: `d1` for a
/// top-level frame, `borrowing/d1` inside a compound.
/// Throws Error(unknown_transform).
std::vector<std::string> list_applicable(const Program& program, const std::string& transform);

/// Applies `transform` at one path. Throws Error(label_not_found) when the
/// path names nothing and Error(not_applicable) when the node does not
/// qualify.
Program apply_at(const Program& program, const std::string& transform, const std::string& path);

/// Replaces the violation condition of the duty labelled `duty` (a bare label
/// or a path) with a counterparty power to declare the violation, guarded by
/// the original condition.
Program rewrite_violation_to_power(const Program& program, const std::string& duty);

struct RewriteResult {
  Program program;
  std::vector<std::string> sites;
};

/// Applies `transform` at every applicable site. A second application finds
/// no sites.
RewriteResult apply_all(const Program& program, const std::string& transform);

}  // namespace dpcl
