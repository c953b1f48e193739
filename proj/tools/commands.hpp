#pragma once

#include <iosfwd>

namespace alm::cli {

enum ExitCode : int {
  kOk = 0,
  kUnexpected = 1,
  kConfigError = 2,
  kNumericalError = 3,
  kIoError = 4,
};

/// Parses the command line, runs one command and maps failures to exit codes.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace alm::cli
