#pragma once

#include <string>

namespace sgame {

/// Entry point behind the sgame binary: subcommands simulate / fit /
/// bounds / verify / experiment. Returns the process exit code; statistical
/// non-convergence is not an error, only I/O, validation, and solver
/// failures are. SGAME_LOG={error,info,debug} controls stderr verbosity.
int run_cli(int argc, const char* const* argv);

}  // namespace sgame
