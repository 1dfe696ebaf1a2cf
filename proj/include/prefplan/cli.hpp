#pragma once

#include <iosfwd>

namespace prefplan {

// Entry point behind the prefplan executable. Exit codes: 0 optimal (or
// success), 2 infeasible, 1 any error.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace prefplan
