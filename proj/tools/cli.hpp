#pragma once

#include <iosfwd>

namespace sfpas::cli {

/// Parses argv, dispatches to a subcommand and writes the result to --out
/// or `out`. Exit codes: 0 success, 2 invalid input, 3 limits or
/// non-convergence, 4 internal error.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace sfpas::cli
