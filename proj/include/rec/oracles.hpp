#pragma once

#include <optional>
#include <vector>

#include "rec/attacks.hpp"

namespace rec {

/// One step of the auxiliary-classifier view of APGD on binary linear members:
/// w_bar = sum_i alpha_i lambda_i w_i with lambda_i taken at the previous iterate,
/// and `delta` the iterate produced by plain PGD against w_bar^T x + b_bar.
struct AuxiliaryStep {
  Vector lambdas;
  Vector w_bar;
  double b_bar = 0.0;
  Vector delta;
  bool ill_defined = false;  // w_bar == 0: the iterate cannot move
};

/// Builds the auxiliary classifiers step by step and attacks each with
/// single-model PGD, starting from the same delta^(0) APGD would use.
/// Element 0 holds delta^(0) only; element k holds step k.
std::vector<AuxiliaryStep> auxiliary_sequence(const BlcEnsemble& rec, const Vector& x, int y,
                                              const AttackConfig& cfg);

struct InconsistencyInstance {
  BlcEnsemble rec;
  LabeledExample example;
  double eps;
};

/// Two mirrored classifiers (w, b) and (-w, b), equal weights, (x, y) = (0, +1),
/// eps = 2 b ||w||_p / ||w||_2^2. delta = eps w / ||w||_p fools the second member,
/// while any delta^(0) orthogonal to w is an APGD fixed point.
InconsistencyInstance inconsistency_instance(const Vector& w, double b, const LpNorm& norm);

/// Exact existence test for an ensemble of binary linear classifiers that are
/// all correct at (x, y): true iff min_i |f_i(x)| / ||w_i||_q < eps.
bool adversarial_exists_blc(const BlcEnsemble& rec, const Vector& x, int y, double eps,
                            const LpNorm& norm);

/// eps * g_m for the member with the smallest boundary distance when it is below eps.
std::optional<Vector> blc_adversarial_witness(const BlcEnsemble& rec, const Vector& x, int y,
                                              double eps, const LpNorm& norm);

/// Unit-lp probe directions: the surface of a regular grid on [-1, 1]^D with
/// about budget/2 points, then random Gaussian directions up to `budget`.
std::vector<Vector> probe_directions(Eigen::Index dim, int budget, std::uint64_t seed);

/// One-sided search over perturbations of norm eps: a returned delta certifies
/// that an adversarial perturbation exists, an empty result proves nothing.
template <class Member>
std::optional<Vector> brute_force_adversarial(const RandomizedEnsemble<Member>& rec, const Vector& x,
                                              int y, double eps, const LpNorm& norm, int budget,
                                              std::uint64_t seed = 0) {
  const double clean = expected_accuracy(rec, x, y);
  for (const Vector& d : probe_directions(x.size(), budget, seed)) {
    Vector delta = d * (eps / norm.norm(d));
    while (norm.norm(delta) > eps) delta *= 1.0 - 0x1.0p-52;
    if (expected_accuracy(rec, x + delta, y) < clean) return delta;
  }
  return std::nullopt;
}

/// min ||z - x||_p over the hyperplane by nested golden-section search over
/// coordinates of the hyperplane (the objective is convex in them). D <= 4.
double numeric_hyperplane_distance(const Hyperplane& h, const Vector& x, const LpNorm& norm);

/// Central finite differences of the logits, column j = d logit_j / dx.
Matrix finite_difference_jacobian(const MulticlassClassifier& f, const Vector& x, double step = 1e-5);

}  // namespace rec
