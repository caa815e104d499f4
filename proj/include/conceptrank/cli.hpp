#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace conceptrank::cli {

enum ExitCode : int { kSuccess = 0, kUsage = 1, kRuntime = 2 };

/// Runs one subcommand (`train`, `index`, `embed-concepts`, `search`, `eval`,
/// `sweep`, `synth`). Data goes to `out` or files, diagnostics to `err`.
/// Precedence: built-in defaults < `--config` file < flags.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace conceptrank::cli
