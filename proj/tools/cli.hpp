#pragma once

#include <iosfwd>

namespace mbfuse::cli {

/// Exit codes. Usage errors come from argument parsing; the rest mirror the
/// library's status categories.
enum ExitCode : int {
  kExitOk = 0,
  kExitInternal = 1,
  kExitUsage = 2,
  kExitParse = 3,
  kExitConfig = 4,
  kExitIo = 5,
  kExitData = 6,
  kExitInvalidArgument = 7,
};

/// Runs one command line. Reports go to `out`; failures are written to `err`
/// as a single "error[<category>]: <message>" line.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace mbfuse::cli
