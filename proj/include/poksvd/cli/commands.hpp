#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace poksvd::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitComputation = 1;
inline constexpr int kExitIo = 2;

/// Entry point of the `poksvd` tool. `args` excludes the program name.
/// Subcommands: train, denoise, code, synth, eval.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace poksvd::cli
