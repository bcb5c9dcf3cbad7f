#pragma once

#include <iosfwd>

namespace trgan::cli {

/// Exit codes: 0 success, 1 validation or runtime failure, 2 usage error.
constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

/// Entry point for `trgan <synth|shuffle|train|predict|evaluate> ...`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace trgan::cli
