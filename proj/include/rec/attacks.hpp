#pragma once

#include <string>
#include <vector>

#include "rec/ensemble.hpp"

namespace rec {

/// Uniform sample from the radius-eps ball: per-coordinate uniform for p=inf,
/// normalized Gaussian scaled by eps * U^(1/D) for p=2.
Vector random_in_ball(Eigen::Index dim, double eps, const LpNorm& norm, Rng& rng);

/// delta^(0) for the configured init kind, drawn from the stream seeded by cfg.seed.
Vector initial_perturbation(const Vector& x, const AttackConfig& cfg);

/// K steps of delta <- Proj(delta + eta * steepest_direction(grad CE)).
/// A zero gradient leaves delta unchanged for that step.
AttackResult pgd(const MulticlassClassifier& f, const Vector& x, int y, const AttackConfig& cfg);
/// Same iteration on the binary cross-entropy of a linear classifier, y in {-1, +1}.
AttackResult pgd(const BinaryLinearClassifier& f, const Vector& x, int y, const AttackConfig& cfg);

/// PGD on the exact expected loss sum_i alpha_i CE_i.
AttackResult apgd(const ModelEnsemble& rec, const Vector& x, int y, const AttackConfig& cfg);
/// PGD on the expected binary cross-entropy; the gradient is -y sum_i alpha_i lambda_i w_i.
AttackResult apgd(const BlcEnsemble& rec, const Vector& x, int y, const AttackConfig& cfg);

/// -y sum_i alpha_i lambda_i w_i evaluated at `point`.
Vector expected_bce_gradient(const BlcEnsemble& rec, const Vector& point, int y);

/// PGD on the cross-entropy of the alpha-weighted mean logits.
AttackResult apgd_logits(const ModelEnsemble& rec, const Vector& x, int y, const AttackConfig& cfg);

/// PGD against member 0 only, scored against the whole ensemble.
AttackResult pgd_first(const ModelEnsemble& rec, const Vector& x, int y, const AttackConfig& cfg);

/// sum_j alpha_j L(x + delta_j, y) with delta_j = PGD against member j; exact enumeration
/// of an attacker that samples its target with the ensemble's own probabilities.
double randomized_pgd_eval(const ModelEnsemble& rec, const Vector& x, int y, const AttackConfig& cfg);

double expected_loss(const ModelEnsemble& rec, const Vector& point, int y);
double expected_loss(const BlcEnsemble& rec, const Vector& point, int y);

/// Runs `attack` cfg.restarts times from random initializations (restart 0 keeps
/// cfg.seed, restart r > 0 uses derive_seed(cfg.seed, r)) and keeps the result
/// with the largest final expected loss; ties keep the earliest.
AttackResult with_restarts(const AttackFn& attack, const ModelEnsemble& rec, const Vector& x, int y,
                           const AttackConfig& cfg);

/// Attack names accepted by the CLI: pgd, pgd-1, apgd, apgd-l, arc.
const std::vector<std::string>& attack_names();
/// Post-attack expected accuracy for a named attack; random init with
/// restarts > 1 routes the PGD-family attacks through with_restarts.
ExampleAttack named_attack(const std::string& name);
/// Single-model attack for cross-robustness matrices (pgd or arc).
AttackFn named_single_attack(const std::string& name);

}  // namespace rec
