#pragma once

#include <iosfwd>

namespace cnnrom::io {

enum ExitCode : int { kExitOk = 0, kExitFailure = 1, kExitUsage = 2 };

/// Entry point of the command-line tool. Subcommands: gen-field, gen-data,
/// train-basis, train-coef, pod, eval, msfem, invert, gradcheck. Each takes
/// --config PATH (.json/.toml), repeatable --set key=value and --out DIR.
/// Results go to `out`, JSON-lines progress logs and errors to `err`.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace cnnrom::io
