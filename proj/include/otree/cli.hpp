#pragma once

#include <iosfwd>

namespace otree {

// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitProtocol = 2;
inline constexpr int kExitMismatch = 3;

// Entry point of the otree binary; `out` receives reports, `err` diagnostics.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace otree
