#include "rec/arc.hpp"

#include <algorithm>
#include <numeric>

namespace rec {

namespace {

// Boost applied to a member's direction so the rescaled candidate crosses its
// boundary regardless of the current perturbation. `projection` is the signed
// component of the current perturbation along the member's normal, in units of
// the dual norm.
double boost_factor(double radius, double zeta, bool leading, double projection, double rho) {
  if (zeta >= radius || leading) return radius;
  return radius / (radius - zeta) * std::abs(projection + zeta) + rho;
}

}  // namespace

AttackResult arc_blc(const BlcEnsemble& rec, const Vector& x, int y, double eps, const LpNorm& norm,
                     double rho_coef, BetaRule rule, bool record_trace) {
  require(y == 1 || y == -1, ErrorCode::kInvalidArgument, "binary label must be +1 or -1");
  require(eps > 0.0, ErrorCode::kInvalidArgument, "arc_blc: eps must be positive");
  require_same_dim(rec.input_dim(), x.size(), "arc_blc");
  const double rho = rho_coef * eps;

  AttackResult out;
  out.norm = norm;
  out.delta = Vector::Zero(x.size());
  out.l_before = expected_accuracy(rec, x, y);
  double v = out.l_before;
  if (record_trace) out.trace.accepted_values.push_back(v);

  const auto order = rec.order_by_alpha();
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    const auto& f = rec.member(order[pos]);
    const double dual = norm.dual_norm(f.weights());
    const Vector g = -y * steepest_direction(f.weights(), norm);
    const double zeta = std::abs(f.value(x)) / dual;
    const double beta =
        rule == BetaRule::kExact
            ? boost_factor(eps, zeta, pos == 0, y * f.weights().dot(out.delta) / dual, rho)
            : eps;

    const Vector step = out.delta + beta * g;
    const double step_norm = norm.norm(step);
    if (step_norm == 0.0) {
      out.skipped_members.push_back(static_cast<int>(order[pos]));
      continue;
    }
    const Vector candidate = (eps / step_norm) * step;
    if (record_trace) out.trace.candidate_norms.push_back(norm.norm(candidate));
    const double candidate_value = expected_accuracy(rec, x + candidate, y);
    if (candidate_value <= v) {
      out.delta = candidate;
      v = candidate_value;
      if (record_trace) out.trace.accepted_values.push_back(v);
    }
  }
  finish_result(rec, x, y, out);
  return out;
}

Linearization linearize(const MulticlassClassifier& f, const Vector& x_tilde) {
  const Vector z = f.logits(x_tilde);
  const Matrix jac = f.jacobian(x_tilde);
  Linearization lin;
  lin.label = argmax(z);
  for (int j = 0; j < z.size(); ++j) {
    if (j == lin.label) continue;
    lin.classes.push_back(j);
    lin.hyperplanes.push_back({jac.col(lin.label) - jac.col(j), z[lin.label] - z[j]});
  }
  return lin;
}

ClosestHyperplane closest_hyperplane(const std::vector<Hyperplane>& hyperplanes, const LpNorm& norm,
                                     int top_g) {
  require(!hyperplanes.empty(), ErrorCode::kInvalidArgument, "closest_hyperplane: no candidates");
  require(top_g >= 0, ErrorCode::kInvalidArgument, "closest_hyperplane: G must be >= 1 (0 = all)");

  std::vector<std::size_t> candidates(hyperplanes.size());
  std::iota(candidates.begin(), candidates.end(), 0);
  if (top_g > 0 && static_cast<std::size_t>(top_g) < hyperplanes.size()) {
    std::stable_sort(candidates.begin(), candidates.end(), [&](std::size_t a, std::size_t b) {
      return hyperplanes[a].offset < hyperplanes[b].offset;
    });
    candidates.resize(top_g);
  }

  ClosestHyperplane best;
  best.degenerate = true;
  for (std::size_t j : candidates) {
    const auto& h = hyperplanes[j];
    if (h.normal.cwiseAbs().maxCoeff() == 0.0) continue;
    const double zeta = std::abs(h.offset) / norm.dual_norm(h.normal);
    if (best.degenerate || zeta < best.zeta || (zeta == best.zeta && j < best.index)) {
      best.degenerate = false;
      best.index = j;
      best.zeta = zeta;
    }
  }
  if (!best.degenerate) best.direction = -steepest_direction(hyperplanes[best.index].normal, norm);
  return best;
}

AttackResult arc(const ModelEnsemble& rec, const Vector& x, int y, const AttackConfig& cfg) {
  cfg.validate();
  require_same_dim(rec.input_dim(), x.size(), "arc");
  // Fail on an unsupported norm before doing any work.
  project_ball(Vector::Zero(x.size()), cfg.eps, cfg.norm);

  AttackResult out;
  out.norm = cfg.norm;
  out.delta = Vector::Zero(x.size());
  out.l_before = expected_accuracy(rec, x, y);
  double v = out.l_before;
  if (cfg.record_trace) out.trace.accepted_values.push_back(v);
  if (cfg.eps == 0.0) {
    finish_result(rec, x, y, out);
    return out;
  }

  const double eta = cfg.step_size;
  const double rho = cfg.rho_coef * eta;
  const auto order = rec.order_by_alpha();
  auto global = [&](const Vector& d) { return constrain_perturbation(d, x, cfg.eps, cfg.norm, cfg.clamp01); };

  for (int k = 0; k < cfg.steps; ++k) {
    Vector local = Vector::Zero(x.size());
    double v_local = v;
    for (std::size_t pos = 0; pos < order.size(); ++pos) {
      const auto& f = *rec.member(order[pos]);
      const Linearization lin = linearize(f, x + out.delta + local);
      const ClosestHyperplane near = closest_hyperplane(lin.hyperplanes, cfg.norm, cfg.top_g);
      if (near.degenerate) {
        out.skipped_members.push_back(static_cast<int>(order[pos]));
        continue;
      }
      const Vector& normal = lin.hyperplanes[near.index].normal;
      const double beta =
          boost_factor(eta, near.zeta, pos == 0, normal.dot(local) / cfg.norm.dual_norm(normal), rho);
      const Vector step = local + beta * near.direction;
      const double step_norm = cfg.norm.norm(step);
      if (step_norm == 0.0) {
        out.skipped_members.push_back(static_cast<int>(order[pos]));
        continue;
      }
      const Vector local_candidate = (eta / step_norm) * step;
      if (cfg.record_trace) out.trace.candidate_norms.push_back(cfg.norm.norm(local_candidate));
      const double candidate_value = expected_accuracy(rec, x + global(out.delta + local_candidate), y);
      if (candidate_value <= v_local) {
        local = local_candidate;
        v_local = candidate_value;
      }
    }
    const Vector candidate = global(out.delta + local);
    const double candidate_value = expected_accuracy(rec, x + candidate, y);
    if (candidate_value <= v) {
      out.delta = candidate;
      v = candidate_value;
      if (cfg.record_trace) out.trace.accepted_values.push_back(v);
    }
  }
  finish_result(rec, x, y, out);
  return out;
}

}  // namespace rec
