#include "rec/oracles.hpp"

#include <functional>

namespace rec {

std::vector<AuxiliaryStep> auxiliary_sequence(const BlcEnsemble& rec, const Vector& x, int y,
                                              const AttackConfig& cfg) {
  require(y == 1 || y == -1, ErrorCode::kInvalidArgument, "binary label must be +1 or -1");
  cfg.validate();
  std::vector<AuxiliaryStep> steps;
  AuxiliaryStep start;
  start.delta = initial_perturbation(x, cfg);
  steps.push_back(start);

  for (int k = 1; k <= cfg.steps; ++k) {
    const Vector& prev = steps.back().delta;
    const Vector point = x + prev;
    AuxiliaryStep s;
    s.lambdas.resize(static_cast<Eigen::Index>(rec.size()));
    s.w_bar = Vector::Zero(x.size());
    for (std::size_t i = 0; i < rec.size(); ++i) {
      const auto& f = rec.member(i);
      s.lambdas[i] = bce_lambda(f.value(point), y);
      s.w_bar += (rec.alpha(i) * s.lambdas[i]) * f.weights();
    }
    // The auxiliary classifier's own BCE gradient at the current iterate.
    const double aux_lambda = bce_lambda(s.w_bar.dot(point) + s.b_bar, y);
    const Vector grad = (-y * aux_lambda) * s.w_bar;
    s.ill_defined = grad.cwiseAbs().maxCoeff() == 0.0;
    s.delta = s.ill_defined ? prev
                            : constrain_perturbation(prev + cfg.step_size * steepest_direction(grad, cfg.norm),
                                                     x, cfg.eps, cfg.norm, cfg.clamp01);
    steps.push_back(std::move(s));
  }
  return steps;
}

InconsistencyInstance inconsistency_instance(const Vector& w, double b, const LpNorm& norm) {
  require(b > 0.0, ErrorCode::kInvalidArgument, "inconsistency instance needs b > 0");
  require(w.size() > 0 && w.cwiseAbs().maxCoeff() > 0.0, ErrorCode::kInvalidArgument,
          "inconsistency instance needs w != 0");
  BlcEnsemble rec({BinaryLinearClassifier(w, b), BinaryLinearClassifier(-w, b)}, {0.5, 0.5});
  const double eps = 2.0 * b * norm.norm(w) / w.squaredNorm();
  return {std::move(rec), LabeledExample{Vector::Zero(w.size()), 1}, eps};
}

namespace {

void require_all_correct(const BlcEnsemble& rec, const Vector& x, int y) {
  for (const auto& f : rec.members()) {
    require(y * f.value(x) > 0.0, ErrorCode::kMisclassifiedInput,
            "existence oracle needs every member to classify (x, y) correctly");
  }
}

}  // namespace

bool adversarial_exists_blc(const BlcEnsemble& rec, const Vector& x, int y, double eps,
                            const LpNorm& norm) {
  require_all_correct(rec, x, y);
  for (const auto& f : rec.members()) {
    if (std::abs(f.value(x)) / norm.dual_norm(f.weights()) < eps) return true;
  }
  return false;
}

std::optional<Vector> blc_adversarial_witness(const BlcEnsemble& rec, const Vector& x, int y,
                                              double eps, const LpNorm& norm) {
  require_all_correct(rec, x, y);
  std::size_t best = 0;
  double best_zeta = kInf;
  for (std::size_t i = 0; i < rec.size(); ++i) {
    const auto& f = rec.member(i);
    const double zeta = std::abs(f.value(x)) / norm.dual_norm(f.weights());
    if (zeta < best_zeta) {
      best_zeta = zeta;
      best = i;
    }
  }
  if (!(best_zeta < eps)) return std::nullopt;
  return Vector(eps * (-y) * steepest_direction(rec.member(best).weights(), norm));
}

std::vector<Vector> probe_directions(Eigen::Index dim, int budget, std::uint64_t seed) {
  require(dim >= 1 && budget >= 1, ErrorCode::kInvalidArgument, "probe_directions: bad shape");
  std::vector<Vector> out;
  // Largest grid resolution whose cube surface fits in half the budget.
  int n = 2;
  auto surface = [dim](int k) { return std::pow(k, dim) - std::pow(std::max(k - 2, 0), dim); };
  while (surface(n + 1) > surface(n) && surface(n + 1) <= budget / 2.0) ++n;
  if (surface(n) <= budget) {
    std::vector<int> idx(dim, 0);
    while (true) {
      Vector v(dim);
      bool on_surface = false;
      for (Eigen::Index i = 0; i < dim; ++i) {
        v[i] = -1.0 + 2.0 * idx[i] / (n - 1);
        on_surface = on_surface || idx[i] == 0 || idx[i] == n - 1;
      }
      if (on_surface) out.push_back(v);
      Eigen::Index i = 0;
      while (i < dim && ++idx[i] == n) idx[i++] = 0;
      if (i == dim) break;
    }
  }
  Rng rng(seed);
  while (static_cast<int>(out.size()) < budget) {
    Vector v = rng.normal_vector(dim);
    if (v.cwiseAbs().maxCoeff() > 0.0) out.push_back(v);
  }
  return out;
}

namespace {

// Golden-section minimization of a convex function on [lo, hi].
double golden_min(const std::function<double(double)>& fn, double lo, double hi) {
  const double r = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - r * (b - a), d = a + r * (b - a);
  double fc = fn(c), fd = fn(d);
  for (int it = 0; it < 90; ++it) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - r * (b - a);
      fc = fn(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + r * (b - a);
      fd = fn(d);
    }
  }
  return std::min({fc, fd, fn(0.5 * (a + b))});
}

}  // namespace

double numeric_hyperplane_distance(const Hyperplane& h, const Vector& x, const LpNorm& norm) {
  const Eigen::Index dim = x.size();
  require_same_dim(h.normal.size(), dim, "numeric_hyperplane_distance");
  require(dim >= 1 && dim <= 4, ErrorCode::kInvalidArgument, "numeric oracle supports D <= 4");
  require(h.normal.cwiseAbs().maxCoeff() > 0.0, ErrorCode::kDegenerateHyperplane, "zero normal");

  // A point on the hyperplane reached along the coordinate axis with the largest |w_k|.
  Eigen::Index k = 0;
  h.normal.cwiseAbs().maxCoeff(&k);
  Vector base = x;
  base[k] -= h.evaluate(x) / h.normal[k];
  if (dim == 1) return norm.norm(base - x);

  // Orthonormal basis of the hyperplane's direction space.
  Eigen::HouseholderQR<Matrix> qr(h.normal);
  const Matrix q = qr.householderQ();
  const Matrix basis = q.rightCols(dim - 1);

  const double radius = 4.0 * (std::sqrt(static_cast<double>(dim)) + 1.0) * (base - x).norm() + 1e-12;
  Vector coords = Vector::Zero(dim - 1);
  std::function<double(Eigen::Index)> minimize_from = [&](Eigen::Index level) -> double {
    if (level == dim - 1) return norm.norm(base + basis * coords - x);
    return golden_min(
        [&, level](double s) {
          coords[level] = s;
          return minimize_from(level + 1);
        },
        -radius, radius);
  };
  return minimize_from(0);
}

Matrix finite_difference_jacobian(const MulticlassClassifier& f, const Vector& x, double step) {
  Matrix jac(f.input_dim(), f.class_count());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Vector hi = x, lo = x;
    hi[i] += step;
    lo[i] -= step;
    jac.row(i) = ((f.logits(hi) - f.logits(lo)) / (2.0 * step)).transpose();
  }
  return jac;
}

}  // namespace rec
