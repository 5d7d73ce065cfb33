#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "cran/config.hpp"

namespace cran::app {

enum ExitCode : int {
    kOk = 0,
    kFailure = 1,
    kConfigError = 2,
    kInfeasible = 3,
    kSizeLimit = 4,
};

const std::vector<std::string>& subcommands();
std::string usage();

// Runs one subcommand described entirely by `cfg` (the subcommand name lives
// under the key "subcommand"). Reports go to cfg["out"] when set and to `out`
// otherwise; a one-line summary always goes to `out`, diagnostics to `err`.
int run(const Config& cfg, std::ostream& out, std::ostream& err);

// Command-line entry point: parses flags, merges them over the config file
// and calls run().
int main_entry(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace cran::app
