#pragma once

#include <filesystem>

#include "odcal/analytical.hpp"
#include "odcal/mesosim.hpp"

// Flat key = value configuration with an optional [analytical] section:
// the simulator settings live at the top level, the fundamental-diagram
// parameters under [analytical]. Lines starting with '#' are comments.

namespace odcal {

struct RunConfig {
  SimConfig sim;
  FdParams fd;
};

RunConfig load_run_config(const std::filesystem::path& file);
void save_run_config(const RunConfig& cfg, const std::filesystem::path& file);

}  // namespace odcal
