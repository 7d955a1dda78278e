#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace boltid::cli {

/// Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.
enum ExitCode : int { kOk = 0, kRuntime = 1, kUsage = 2 };

/// Entry point behind the `boltid` executable. `args` excludes the
/// program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace boltid::cli
