#pragma once

namespace defgrid::workbench {

/// Sets the spdlog level from DEFGRID_LOG (trace, debug, info, warn, error,
/// critical, off); warn when unset. Unknown values fall back to warn.
void init_logging();

}  // namespace defgrid::workbench
