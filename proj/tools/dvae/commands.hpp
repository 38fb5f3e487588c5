// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

namespace dvae::cli {

/// Exit codes shared by every subcommand.
enum ExitCode : int {
  kOk = 0,
  kIoFailure = 1,
  kInvalidConfig = 2,
  kDiverged = 3,
};

/// Runs `dvae <args...>`; args excludes the program name. Normal output goes
/// to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Worker threads from DVAE_THREADS (default 1).
std::size_t threads_from_env();

}  // namespace dvae::cli
