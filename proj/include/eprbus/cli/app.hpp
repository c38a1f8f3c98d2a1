#pragma once

#include <iosfwd>

namespace eprbus::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitNumerical = 3;

/// Entry point of the eprbus tool: verbs run, compare, plan, sweep.
/// Reports go to the output path when one is configured, otherwise to `out`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace eprbus::cli
