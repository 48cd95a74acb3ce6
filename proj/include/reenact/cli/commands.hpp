#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace reenact::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitBadFlags = 2,
  kExitIo = 3,
  kExitConfig = 4,
  kExitNonFinite = 5,
  kExitResolution = 6,
};

// Runs one command line (args excludes the program name). Never throws.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace reenact::cli
