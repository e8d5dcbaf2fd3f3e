#pragma once

#include <ostream>
#include <string>

namespace rec::cli {

/// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kVerifyFailed = 1;
inline constexpr int kUsageError = 2;
inline constexpr int kRuntimeError = 3;

/// rec_cli <train|attack|sweep|verify|cross-matrix> --config <json> --out <path>
///         [--seed <u64>] [--threads <n>] [--mutate-beta]
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Shortest decimal that round-trips; "inf" for infinity.
std::string format_number(double v);

}  // namespace rec::cli
