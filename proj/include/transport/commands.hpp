#pragma once

#include "transport/run_config.hpp"

namespace transport {

// Subcommand bodies; they throw transport::Error on failure and write their
// output files only after all computation has finished.
void cmd_estimate(const RunConfig& cfg);
void cmd_sensitivity(const RunConfig& cfg);
void cmd_simulate(const RunConfig& cfg);
void cmd_check_positivity(const RunConfig& cfg);

}  // namespace transport
