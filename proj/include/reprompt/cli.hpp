#pragma once

namespace reprompt {

// Command-line entry point (subcommands: synth-logs, mine, build-dataset,
// enhance, evaluate, report). Returns the process exit code: 0 on success,
// 1 when some examples failed (partial result), 2 on usage, configuration,
// or input errors.
int run_cli(int argc, const char* const* argv);

}  // namespace reprompt
