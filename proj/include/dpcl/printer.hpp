#pragma once

#include <string>

#include "dpcl/ast.hpp"

namespace dpcl {

/// Renders a program as DPCL source. Declarations are separated by a blank
/// line; an empty program renders as the empty string.
std::string pretty_print(const Program& program);

/// Renders one term. Refined objects and frames span several lines unless
/// `single_line` is set; events always render inline.
std::string to_source(const Term& term, bool single_line = false);

std::string to_source(const Frame& frame);
std::string to_source(const Rule& rule);
std::string to_source(const CompoundDecl& decl);

}  // namespace dpcl
