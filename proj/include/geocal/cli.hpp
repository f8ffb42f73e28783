#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "geocal/error.hpp"

namespace geocal {

enum ExitCode : int {
    kExitOk = 0,
    kExitInput = 2,
    kExitInfeasible = 3,
    kExitInternal = 4,
};

int exit_code_for(ErrorKind kind) noexcept;

// args excludes the program name. Every command reads flags first and then
// GEOCAL_<FLAG> environment variables for the shared run configuration.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_cli(int argc, char** argv);

}  // namespace geocal
