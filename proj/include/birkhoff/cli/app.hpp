#pragma once

#include <ostream>

#include "birkhoff/cli/cache.hpp"
#include "birkhoff/cli/config.hpp"

namespace birkhoff::cli {

// Runs one subcommand from a resolved config. Artifacts are returned, not written.
RunPayload execute(const RunConfig& config);

// Full command line entry point. Exit codes: 0 success, 2 configuration or
// usage errors, 3 numerical/certification failures, 4 cache corruption,
// 1 anything unexpected.
int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace birkhoff::cli
