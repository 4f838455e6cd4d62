#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace glimmer::cli {

// Process exit codes.
enum ExitCode : int {
    kSuccess = 0,
    kDataError = 1,
    kUsageError = 2,
    kNumericError = 3,
    kCheckpointError = 4,
};

// Entry point behind `glimmer <synth|train|tune|eval|predict> [flags]`.
// `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Parses flat `key = value` text (`#` starts a comment) into `--key=value` tokens.
std::vector<std::string> config_tokens(std::istream& in);

}  // namespace glimmer::cli
