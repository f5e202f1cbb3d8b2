#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace latfact::cli {

// Stable exit-code contract.
inline constexpr int exit_ok = 0;
inline constexpr int exit_internal = 1;
inline constexpr int exit_invalid_input = 2;
inline constexpr int exit_budget_exhausted = 3;

/// Runs the CLI with the given arguments (excluding argv[0]); all output goes
/// to the provided streams so tests can drive it in-process.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int main(int argc, char** argv);

}  // namespace latfact::cli
