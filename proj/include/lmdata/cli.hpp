#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace lmdata::cli {

inline constexpr std::uint64_t kDefaultSeed = 42;

enum ExitCode : int { kOk = 0, kValidationError = 1, kUsageError = 2 };

/// Runs one command line (without the program name). Reports go to the
/// files named by the flags; `out` receives stdout-style output and `err`
/// usage text or a JSON error object.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace lmdata::cli
