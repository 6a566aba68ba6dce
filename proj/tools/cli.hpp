#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace sspred::cli {

enum ExitCode : int {
    kOk = 0,
    kFailure = 1,
    kValidation = 2,
    kDivergence = 3,
    kAssertion = 4,
};

/// Environment variable naming the default output root.
inline constexpr const char* kOutputRootEnv = "SSP_OUTPUT_ROOT";

/// Runs one command line (args[0] is the program name) and returns the exit code.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace sspred::cli
