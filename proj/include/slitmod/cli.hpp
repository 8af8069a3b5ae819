#pragma once

#include <ostream>

#include "slitmod/config.hpp"

namespace slitmod {

/**
 * Runs cfg.command and writes its CSV table to `out`: comment rows with the
 * command, seed and configuration, then a column header naming units, then
 * data rows. `plot` (optional) receives plain "x y" columns. The wall_time_s
 * column is NA unless `timing` is set. Returns the exit code.
 */
int run_command(const ExperimentConfig& cfg, std::ostream& out, std::ostream* plot = nullptr, bool timing = false);

}  // namespace slitmod
