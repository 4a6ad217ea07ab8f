#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace stathm::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitCheckFailed = 2;
inline constexpr int kExitUsage = 64;

// args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, const char* const* argv);

}  // namespace stathm::cli
