#pragma once

#include <ostream>

namespace defgrid::workbench {

/// Exit codes: 0 ok, 1 user error (bad flags or input), 2 internal error.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace defgrid::workbench
