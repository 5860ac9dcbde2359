#ifndef REGIME_MV_CLI_HPP
#define REGIME_MV_CLI_HPP

#include <iosfwd>
#include <string>
#include <vector>

namespace regime_mv {

// Command-line front end. Subcommands: validate, feasible, solve, frontier,
// policy, simulate. Exit codes: 0 success, 1 validation/feasibility failure,
// 2 solver failure, 3 usage error. Diagnostics go to `err`, data to files or
// `out`. The environment variable REGIME_MV_THREADS caps the worker count
// (0 or unset = automatic).
int run_cli(std::vector<std::string> args, std::ostream& out, std::ostream& err);

} // namespace regime_mv

#endif
