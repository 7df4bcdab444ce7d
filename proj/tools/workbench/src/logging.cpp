#include "defgrid/workbench/logging.hpp"

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <string>

namespace defgrid::workbench {

void init_logging() {
  auto logger = spdlog::get("defgrid");
  if (!logger) {
    logger = spdlog::stderr_color_mt("defgrid");
    logger->set_pattern("[%H:%M:%S.%e] [%^%l%$] %v");
    spdlog::set_default_logger(logger);
  }
  spdlog::level::level_enum level = spdlog::level::warn;
  if (const char* env = std::getenv("DEFGRID_LOG")) {
    const std::string name(env);
    level = spdlog::level::from_str(name);
    // from_str maps unknown names to off
    if (level == spdlog::level::off && name != "off") level = spdlog::level::warn;
  }
  spdlog::set_level(level);
}

}  // namespace defgrid::workbench
