#include "rec/lp_geometry.hpp"

#include <algorithm>
#include <cstdlib>
#include <sstream>

#include "rec/models.hpp"

namespace rec {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidNorm: return "invalid-norm";
    case ErrorCode::kZeroGradient: return "zero-gradient";
    case ErrorCode::kUnsupportedProjection: return "unsupported-projection";
    case ErrorCode::kDegenerateHyperplane: return "degenerate-hyperplane";
    case ErrorCode::kMisclassifiedInput: return "misclassified-input";
    case ErrorCode::kDimensionMismatch: return "dimension-mismatch";
    case ErrorCode::kInvalidArgument: return "invalid-argument";
    case ErrorCode::kInvalidModel: return "invalid-model";
    case ErrorCode::kTrainingDiverged: return "training-diverged";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kFormat: return "format";
  }
  return "unknown";
}

double dual_exponent(double p) {
  if (!(p >= 1.0)) {
    throw Error(ErrorCode::kInvalidNorm, "lp exponent must be >= 1, got " + std::to_string(p));
  }
  if (p == 1.0) return kInf;
  if (std::isinf(p)) return 1.0;
  if (p == 2.0) return 2.0;
  return p / (p - 1.0);
}

LpNorm::LpNorm(double p) : p_(p), q_(dual_exponent(p)) {}

double LpNorm::lp_norm(const Vector& v, double p) {
  if (v.size() == 0) return 0.0;
  const double scale = v.cwiseAbs().maxCoeff();
  if (std::isinf(p) || scale == 0.0) return scale;
  if (p == 1.0) return v.cwiseAbs().sum();
  if (p == 2.0) return v.norm();
  double acc = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) acc += std::pow(std::abs(v[i]) / scale, p);
  return scale * std::pow(acc, 1.0 / p);
}

std::string LpNorm::name() const {
  if (is_inf()) return "inf";
  std::ostringstream os;
  os << p_;
  return os.str();
}

LpNorm LpNorm::parse(const std::string& text) {
  if (text == "inf" || text == "Inf" || text == "linf") return linf();
  char* end = nullptr;
  const double p = std::strtod(text.c_str(), &end);
  if (end == text.c_str() || *end != '\0') {
    throw Error(ErrorCode::kInvalidNorm, "cannot parse lp exponent '" + text + "'");
  }
  return LpNorm(p);
}

Vector steepest_direction(const Vector& g, const LpNorm& norm) {
  const double scale = g.size() ? g.cwiseAbs().maxCoeff() : 0.0;
  if (scale == 0.0) throw Error(ErrorCode::kZeroGradient, "steepest direction of a zero vector");

  if (norm.is_inf()) return g.unaryExpr([](double v) { return sign(v); });

  if (norm.p() == 1.0) {
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < g.size(); ++i) {
      if (std::abs(g[i]) > std::abs(g[best])) best = i;
    }
    Vector v = Vector::Zero(g.size());
    v[best] = sign(g[best]);
    return v;
  }

  if (norm.p() == 2.0) return g / g.norm();

  // Homogeneous of degree zero, so work on g / max|g_i| to keep powers finite.
  const double q = norm.q();
  const Vector u = g / scale;
  Vector v(u.size());
  for (Eigen::Index i = 0; i < u.size(); ++i) v[i] = std::pow(std::abs(u[i]), q - 1.0) * sign(u[i]);
  return v / std::pow(LpNorm::lp_norm(u, q), q - 1.0);
}

Vector project_ball(const Vector& delta, double eps, const LpNorm& norm) {
  require(eps >= 0.0, ErrorCode::kInvalidArgument, "ball radius must be nonnegative");
  if (norm.is_inf()) return delta.cwiseMax(-eps).cwiseMin(eps);
  if (norm.p() == 2.0) {
    const double n = delta.norm();
    if (n <= eps) return delta;
    // Rounding can leave eps/n * delta a few ulps outside the ball; shrink
    // until it is inside so the projection is exactly idempotent.
    Vector out = delta * (eps / n);
    while (out.norm() > eps) out *= 1.0 - 0x1.0p-52;
    return out;
  }
  throw Error(ErrorCode::kUnsupportedProjection,
              "ball projection is only available for p in {2, inf}, got p=" + norm.name());
}

Vector constrain_perturbation(const Vector& delta, const Vector& x, double eps,
                              const LpNorm& norm, bool clamp01) {
  Vector out = project_ball(delta, eps, norm);
  if (clamp01) out = (x + out).cwiseMax(0.0).cwiseMin(1.0) - x;
  return out;
}

ProjectionResult hyperplane_projection(const Hyperplane& h, const Vector& x, const LpNorm& norm) {
  require_same_dim(h.normal.size(), x.size(), "hyperplane_projection");
  if (h.normal.size() == 0 || h.normal.cwiseAbs().maxCoeff() == 0.0) {
    throw Error(ErrorCode::kDegenerateHyperplane, "hyperplane normal is the zero vector");
  }
  const double value = h.evaluate(x);
  ProjectionResult out;
  out.zeta = std::abs(value) / norm.dual_norm(h.normal);
  out.direction = -sign(value) * steepest_direction(h.normal, norm);
  out.foot = x + out.zeta * out.direction;
  out.on_boundary = value == 0.0;
  return out;
}

bool fooling_check(const BinaryLinearClassifier& f, const Vector& x, int y,
                   const Vector& delta, const LpNorm& norm) {
  require(y == 1 || y == -1, ErrorCode::kInvalidArgument, "binary label must be +1 or -1");
  require_same_dim(f.dim(), delta.size(), "fooling_check");
  const double margin = y * f.value(x);
  require(margin > 0.0, ErrorCode::kMisclassifiedInput, "fooling_check: (x, y) is not correctly classified");
  const double wd = f.weights().dot(delta);
  const double dual = norm.dual_norm(f.weights());
  const double zeta = margin / dual;
  return -y * wd > 0.0 && std::abs(wd) / dual > zeta;
}

}  // namespace rec
