#pragma once

#include <ostream>

namespace psd::cli {

/// Exit codes: 0 success, 1 validation or I/O failure, 2 numerical failure.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 1;
inline constexpr int kExitNumerical = 2;

/// Entry point of the `psd` tool, with streams injected for in-process use.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace psd::cli
