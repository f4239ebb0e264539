#pragma once

#include <ostream>

namespace warmmem {

/// Entry point of the `warmmem` command-line tool.
///
/// Exit codes: 0 success, 1 computation failure (solver error, non-converged
/// fit), 2 usage or input error.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace warmmem
