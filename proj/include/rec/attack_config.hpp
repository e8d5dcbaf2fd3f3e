#pragma once

#include <cstdint>
#include <vector>

#include "rec/lp_geometry.hpp"

namespace rec {

enum class InitKind { kZero, kRandom };

/// Parameters shared by every attack. `top_g == 0` means the exhaustive
/// closest-hyperplane search over all C-1 boundaries.
struct AttackConfig {
  double eps = 0.0;
  LpNorm norm = LpNorm::linf();
  int steps = 10;
  double step_size = 0.0;
  InitKind init = InitKind::kZero;
  int restarts = 1;
  double rho_coef = 0.05;
  int top_g = 0;
  bool clamp01 = false;
  std::uint64_t seed = 0;
  bool record_trace = false;

  void validate() const;
};

/// Per-step observations, filled only when AttackConfig::record_trace is set.
struct AttackTrace {
  std::vector<Vector> iterates;        // PGD family: delta^(0) .. delta^(K)
  std::vector<Vector> gradients;       // PGD family: gradient used at each step
  std::vector<double> accepted_values; // ARC: expected accuracy after each accepted update
  std::vector<double> candidate_norms; // ARC: lp norm of each candidate before projection
};

struct AttackResult {
  Vector delta;
  LpNorm norm;
  double l_before = 1.0;
  double l_after = 1.0;
  std::vector<bool> fooled;  // member i misclassifies x + delta
  int frozen_steps = 0;      // PGD family: zero-gradient steps
  std::vector<int> skipped_members;  // ARC: members skipped for a degenerate direction
  AttackTrace trace;
};

}  // namespace rec
