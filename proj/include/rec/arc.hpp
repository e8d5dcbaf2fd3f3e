#pragma once

#include <vector>

#include "rec/ensemble.hpp"

namespace rec {

/// How the boost factor beta is chosen for non-leading members in arc_blc.
/// kCorrupted replaces the adaptive rule with beta = eps; it exists only so
/// the verification harness can demonstrate that it detects a broken attack.
enum class BetaRule { kExact, kCorrupted };

/// Greedy single pass over binary linear members in descending-alpha order.
///
/// For member i the optimal unit-lp direction g = -y |w_i|^(q-1) sgn(w_i) / ||w_i||_q^(q-1)
/// and the boundary distance zeta = |f_i(x)| / ||w_i||_q are combined with the
/// running perturbation as eps * (delta + beta g) / ||delta + beta g||_p, where
///   beta = eps                                                  if zeta >= eps or i leads,
///   beta = eps / (eps - zeta) |y w_i^T delta / ||w_i||_q + zeta| + rho   otherwise,
/// and rho = rho_coef * eps. A candidate replaces delta whenever it does not
/// raise the expected accuracy. The result has lp norm eps, or is zero.
AttackResult arc_blc(const BlcEnsemble& rec, const Vector& x, int y, double eps, const LpNorm& norm,
                     double rho_coef = 0.05, BetaRule rule = BetaRule::kExact,
                     bool record_trace = false);

/// First-order model of a classifier's decision region around x_tilde.
/// hyperplanes[k] belongs to classes[k] (ascending, skipping `label`) and is
/// written in displacement coordinates u - x_tilde:
///   normal = grad f_label - grad f_j,  offset = f_label - f_j.
struct Linearization {
  int label = 0;
  std::vector<int> classes;
  std::vector<Hyperplane> hyperplanes;
};

Linearization linearize(const MulticlassClassifier& f, const Vector& x_tilde);

struct ClosestHyperplane {
  std::size_t index = 0;  // position in the hyperplane list
  double zeta = kInf;
  Vector direction;       // -|w|^(q-1) sgn(w) / ||w||_q^(q-1)
  bool degenerate = false;  // every candidate had a zero normal
};

/// argmin_j |offset_j| / ||normal_j||_q over the `top_g` hyperplanes with the
/// smallest offsets (top_g = 0 or >= size means all). Ties go to the lowest
/// position in the list. Zero normals are never selected.
ClosestHyperplane closest_hyperplane(const std::vector<Hyperplane>& hyperplanes, const LpNorm& norm,
                                     int top_g);

/// Multiclass ARC: K rounds of a local greedy search of radius cfg.step_size
/// over the members (descending alpha), each member contributing a candidate
/// built from its linearized nearest boundary; local and global candidates are
/// accepted only when the exact expected accuracy does not increase.
/// rho = cfg.rho_coef * cfg.step_size.
AttackResult arc(const ModelEnsemble& rec, const Vector& x, int y, const AttackConfig& cfg);

}  // namespace rec
