#pragma once

#include <string>
#include <vector>

#include "rec/arc.hpp"
#include "rec/oracles.hpp"

namespace rec {

struct SuiteReport {
  std::string name;
  int trials = 0;
  int passed = 0;
  int failed = 0;
  double worst = 0.0;             // largest error measured by the suite, if it measures one
  int monotonic_violations = 0;   // ARC traces whose accepted values went up
  std::string first_failure;

  bool ok() const { return failed == 0 && monotonic_violations == 0 && trials > 0; }
  void record(bool pass, const std::string& detail);
};

struct VerifyOptions {
  std::uint64_t seed = 0;
  int consistency_trials = 10000;
  int inconsistency_trials = 100;
  int auxiliary_trials = 1000;
  int distance_trials = 100;
  int jacobian_trials = 100;
  int geometry_trials = 1000;
  int existence_trials = 1000;
  BetaRule beta_rule = BetaRule::kExact;
};

// Tolerances.
inline constexpr double kAuxiliaryTolerance = 1e-9;
inline constexpr double kDistanceTolerance = 1e-6;
inline constexpr double kJacobianStep = 1e-5;
inline constexpr double kJacobianRelTolerance = 1e-4;
inline constexpr double kUnitNormTolerance = 1e-9;

/// Random correct-everywhere BLC ensembles with eps above the smallest boundary
/// distance; arc_blc must strictly lower the expected accuracy.
SuiteReport verify_consistency(const VerifyOptions& opt);
/// Mirrored-pair instances: APGD from zero stays at 1, arc_blc reaches 0.5,
/// brute force finds an adversarial perturbation.
SuiteReport verify_inconsistency(const VerifyOptions& opt);
/// APGD iterates against PGD on the auxiliary classifiers.
SuiteReport verify_auxiliary(const VerifyOptions& opt);
/// Closed-form hyperplane distance against numeric minimization; eps = 1.01 zeta flips the sign.
SuiteReport verify_hyperplane_distance(const VerifyOptions& opt);
/// Analytic Jacobians of blc, linear and mlp (tanh, softplus) against central differences.
SuiteReport verify_jacobian(const VerifyOptions& opt);
/// Steepest direction unit norm and optimality; ball projection idempotent and bounded.
SuiteReport verify_geometry(const VerifyOptions& opt);
/// Exact existence oracle against brute force on small instances (one-sided), and its witness.
SuiteReport verify_existence(const VerifyOptions& opt);

std::vector<SuiteReport> run_all_suites(const VerifyOptions& opt);

/// Random BLC ensemble with every member correct at (x, y), as used by the suites.
struct BlcInstance {
  BlcEnsemble rec;
  Vector x;
  int y;
  LpNorm norm;
  double min_zeta;
};
BlcInstance random_blc_instance(Rng& rng, int max_members, int min_dim, int max_dim,
                                const std::vector<LpNorm>& norms);

/// True when the values never increase.
bool non_increasing(const std::vector<double>& values);

}  // namespace rec
