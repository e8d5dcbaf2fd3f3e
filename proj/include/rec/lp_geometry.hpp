#pragma once

#include <string>

#include "rec/types.hpp"

namespace rec {

class BinaryLinearClassifier;

/// An lp norm with exponent p in [1, inf] and its dual exponent q.
class LpNorm {
 public:
  explicit LpNorm(double p = 2.0);

  static LpNorm l1() { return LpNorm(1.0); }
  static LpNorm l2() { return LpNorm(2.0); }
  static LpNorm linf() { return LpNorm(kInf); }

  double p() const { return p_; }
  double q() const { return q_; }
  bool is_inf() const { return std::isinf(p_); }

  /// ||v||_p, scaled internally so large p does not overflow.
  double norm(const Vector& v) const { return lp_norm(v, p_); }
  /// ||v||_q.
  double dual_norm(const Vector& v) const { return lp_norm(v, q_); }

  /// "1", "2", "inf", or the decimal exponent.
  std::string name() const;
  static LpNorm parse(const std::string& text);

  static double lp_norm(const Vector& v, double p);

  friend bool operator==(const LpNorm& a, const LpNorm& b) { return a.p_ == b.p_; }

 private:
  double p_;
  double q_;
};

/// Returns q with 1/p + 1/q = 1 (p=1 -> inf, p=inf -> 1). Throws kInvalidNorm for p < 1.
double dual_exponent(double p);

/// Unit-lp direction v maximizing <g, v>: |g|^(q-1) sgn(g) / ||g||_q^(q-1).
/// For p=inf this is sgn(g); for p=1 a one-hot vector on the first coordinate
/// of maximal |g_i|. Throws kZeroGradient when g = 0.
Vector steepest_direction(const Vector& g, const LpNorm& norm);

/// Euclidean projection onto the radius-eps lp ball; only p in {2, inf}.
Vector project_ball(const Vector& delta, double eps, const LpNorm& norm);

/// Projects `delta` onto the ball and, when `clamp01` is set, clips x + delta to [0,1]^D.
Vector constrain_perturbation(const Vector& delta, const Vector& x, double eps,
                              const LpNorm& norm, bool clamp01);

/// { u : normal^T u + offset = 0 }
struct Hyperplane {
  Vector normal;
  double offset = 0.0;

  double evaluate(const Vector& u) const { return normal.dot(u) + offset; }
};

struct ProjectionResult {
  double zeta = 0.0;   // shortest lp distance to the hyperplane
  Vector direction;    // unit-lp direction from x towards the hyperplane
  Vector foot;         // x + zeta * direction
  // x lies on the hyperplane: sgn(0) = 0 leaves `direction` all-zero.
  bool on_boundary = false;
};

/// Closed-form lp projection of x onto h. Throws kDegenerateHyperplane for a zero normal.
ProjectionResult hyperplane_projection(const Hyperplane& h, const Vector& x,
                                       const LpNorm& norm);

/// True iff delta moves a correctly classified (x, y) across f's boundary,
/// decided through the sign and dual-norm margin conditions on w^T delta.
/// Throws kMisclassifiedInput if y * f(x) <= 0.
bool fooling_check(const BinaryLinearClassifier& f, const Vector& x, int y,
                   const Vector& delta, const LpNorm& norm);

}  // namespace rec
