#pragma once

#include <ostream>

namespace eparvi {

/// Exit codes of the command-line front end.
inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

/// Entry point shared by the executable and the tests.
int run_cli(int argc, const char *const *argv, std::ostream &out,
            std::ostream &err);

} // namespace eparvi
