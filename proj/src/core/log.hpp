#pragma once

#include <spdlog/spdlog.h>

namespace mbda {

// Library-wide logger; writes to standard error only.
spdlog::logger& logger();

void set_log_level(spdlog::level::level_enum level);

}  // namespace mbda
