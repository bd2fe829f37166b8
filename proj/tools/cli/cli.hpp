#pragma once

#include <iosfwd>

namespace stopwise::cli {

/// Runs one subcommand. Returns 0 on success, 1 on usage or input errors,
/// 2 on numerical failure (no convergence, budget exceeded, domain error).
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace stopwise::cli
