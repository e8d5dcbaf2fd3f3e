#include "rec/attacks.hpp"

#include <functional>

#include "rec/arc.hpp"

namespace rec {

void AttackConfig::validate() const {
  require(eps >= 0.0 && std::isfinite(eps), ErrorCode::kInvalidArgument, "eps must be a finite value >= 0");
  require(steps >= 0, ErrorCode::kInvalidArgument, "steps must be >= 0");
  require(eps == 0.0 || step_size > 0.0, ErrorCode::kInvalidArgument, "step_size must be positive");
  require(restarts >= 1, ErrorCode::kInvalidArgument, "restarts must be >= 1");
  require(rho_coef > 0.0, ErrorCode::kInvalidArgument, "rho_coef must be positive");
  require(top_g >= 0, ErrorCode::kInvalidArgument, "top_g must be >= 0 (0 = all)");
}

namespace {

void require_projectable(const LpNorm& norm) {
  if (!(norm.is_inf() || norm.p() == 2.0)) {
    throw Error(ErrorCode::kUnsupportedProjection,
                "PGD-family attacks support p in {2, inf}, got p=" + norm.name());
  }
}

using GradientFn = std::function<Vector(const Vector& point)>;

// Shared PGD iteration; `grad` returns the ascent direction's gradient at x + delta.
Vector run_pgd(const Vector& x, const AttackConfig& cfg, const GradientFn& grad, AttackResult& out) {
  cfg.validate();
  require_projectable(cfg.norm);
  Vector delta = initial_perturbation(x, cfg);
  if (cfg.record_trace) out.trace.iterates.push_back(delta);
  for (int k = 0; k < cfg.steps; ++k) {
    const Vector g = grad(x + delta);
    if (cfg.record_trace) out.trace.gradients.push_back(g);
    if (g.cwiseAbs().maxCoeff() == 0.0) {
      ++out.frozen_steps;
    } else {
      delta = constrain_perturbation(delta + cfg.step_size * steepest_direction(g, cfg.norm), x,
                                     cfg.eps, cfg.norm, cfg.clamp01);
    }
    if (cfg.record_trace) out.trace.iterates.push_back(delta);
  }
  return delta;
}

}  // namespace

Vector random_in_ball(Eigen::Index dim, double eps, const LpNorm& norm, Rng& rng) {
  require_projectable(norm);
  Vector v(dim);
  if (norm.is_inf()) {
    for (Eigen::Index i = 0; i < dim; ++i) v[i] = rng.uniform(-eps, eps);
    return v;
  }
  v = rng.normal_vector(dim);
  const double n = v.norm();
  if (n == 0.0) return Vector::Zero(dim);
  return v * (eps * std::pow(rng.uniform(), 1.0 / static_cast<double>(dim)) / n);
}

Vector initial_perturbation(const Vector& x, const AttackConfig& cfg) {
  if (cfg.init == InitKind::kZero) return Vector::Zero(x.size());
  Rng rng(cfg.seed);
  const Vector v = random_in_ball(x.size(), cfg.eps, cfg.norm, rng);
  return cfg.clamp01 ? Vector((x + v).cwiseMax(0.0).cwiseMin(1.0) - x) : v;
}

AttackResult pgd(const MulticlassClassifier& f, const Vector& x, int y, const AttackConfig& cfg) {
  require_same_dim(f.input_dim(), x.size(), "pgd");
  AttackResult out;
  out.norm = cfg.norm;
  out.l_before = predict(f, x) == y ? 1.0 : 0.0;
  out.delta = run_pgd(x, cfg, [&](const Vector& p) { return ce_loss_grad(f, p, y).grad; }, out);
  const bool correct = predict(f, x + out.delta) == y;
  out.l_after = correct ? 1.0 : 0.0;
  out.fooled = {!correct};
  return out;
}

AttackResult pgd(const BinaryLinearClassifier& f, const Vector& x, int y, const AttackConfig& cfg) {
  require_same_dim(f.dim(), x.size(), "pgd");
  AttackResult out;
  out.norm = cfg.norm;
  out.l_before = f.decide(x) == y ? 1.0 : 0.0;
  out.delta = run_pgd(x, cfg, [&](const Vector& p) { return bce_loss_grad(f, p, y).grad; }, out);
  const bool correct = f.decide(x + out.delta) == y;
  out.l_after = correct ? 1.0 : 0.0;
  out.fooled = {!correct};
  return out;
}

AttackResult apgd(const ModelEnsemble& rec, const Vector& x, int y, const AttackConfig& cfg) {
  require_same_dim(rec.input_dim(), x.size(), "apgd");
  AttackResult out;
  out.norm = cfg.norm;
  out.l_before = expected_accuracy(rec, x, y);
  out.delta = run_pgd(
      x, cfg,
      [&](const Vector& p) {
        Vector g = Vector::Zero(x.size());
        for (std::size_t i = 0; i < rec.size(); ++i) g += rec.alpha(i) * ce_loss_grad(*rec.member(i), p, y).grad;
        return g;
      },
      out);
  finish_result(rec, x, y, out);
  return out;
}

Vector expected_bce_gradient(const BlcEnsemble& rec, const Vector& point, int y) {
  Vector g = Vector::Zero(point.size());
  for (std::size_t i = 0; i < rec.size(); ++i) g += rec.alpha(i) * bce_loss_grad(rec.member(i), point, y).grad;
  return g;
}

AttackResult apgd(const BlcEnsemble& rec, const Vector& x, int y, const AttackConfig& cfg) {
  require_same_dim(rec.input_dim(), x.size(), "apgd");
  AttackResult out;
  out.norm = cfg.norm;
  out.l_before = expected_accuracy(rec, x, y);
  out.delta = run_pgd(x, cfg, [&](const Vector& p) { return expected_bce_gradient(rec, p, y); }, out);
  finish_result(rec, x, y, out);
  return out;
}

AttackResult apgd_logits(const ModelEnsemble& rec, const Vector& x, int y, const AttackConfig& cfg) {
  require_same_dim(rec.input_dim(), x.size(), "apgd_logits");
  const Eigen::Index classes = rec.member(0)->class_count();
  for (const auto& m : rec.members()) {
    require(m->class_count() == classes, ErrorCode::kDimensionMismatch,
            "apgd_logits: members must share the label space");
  }
  AttackResult out;
  out.norm = cfg.norm;
  out.l_before = expected_accuracy(rec, x, y);
  out.delta = run_pgd(
      x, cfg,
      [&](const Vector& p) {
        Vector mean = Vector::Zero(classes);
        for (std::size_t i = 0; i < rec.size(); ++i) mean += rec.alpha(i) * rec.member(i)->logits(p);
        Vector upstream = softmax(mean);
        upstream[y] -= 1.0;
        Vector g = Vector::Zero(x.size());
        for (std::size_t i = 0; i < rec.size(); ++i) {
          g += rec.alpha(i) * rec.member(i)->input_gradient(p, upstream);
        }
        return g;
      },
      out);
  finish_result(rec, x, y, out);
  return out;
}

AttackResult pgd_first(const ModelEnsemble& rec, const Vector& x, int y, const AttackConfig& cfg) {
  AttackResult single = pgd(*rec.member(0), x, y, cfg);
  AttackResult out;
  out.norm = cfg.norm;
  out.delta = std::move(single.delta);
  out.frozen_steps = single.frozen_steps;
  out.trace = std::move(single.trace);
  out.l_before = expected_accuracy(rec, x, y);
  finish_result(rec, x, y, out);
  return out;
}

double randomized_pgd_eval(const ModelEnsemble& rec, const Vector& x, int y, const AttackConfig& cfg) {
  double total = 0.0;
  for (std::size_t j = 0; j < rec.size(); ++j) {
    const Vector delta = pgd(*rec.member(j), x, y, cfg).delta;
    total += rec.alpha(j) * expected_accuracy(rec, x + delta, y);
  }
  return total;
}

double expected_loss(const ModelEnsemble& rec, const Vector& point, int y) {
  double total = 0.0;
  for (std::size_t i = 0; i < rec.size(); ++i) total += rec.alpha(i) * cross_entropy(rec.member(i)->logits(point), y);
  return total;
}

double expected_loss(const BlcEnsemble& rec, const Vector& point, int y) {
  double total = 0.0;
  for (std::size_t i = 0; i < rec.size(); ++i) total += rec.alpha(i) * bce_loss_grad(rec.member(i), point, y).loss;
  return total;
}

AttackResult with_restarts(const AttackFn& attack, const ModelEnsemble& rec, const Vector& x, int y,
                           const AttackConfig& cfg) {
  require(cfg.restarts >= 1, ErrorCode::kInvalidArgument, "restarts must be >= 1");
  AttackResult best;
  double best_loss = -kInf;
  for (int r = 0; r < cfg.restarts; ++r) {
    AttackConfig c = cfg;
    c.init = InitKind::kRandom;
    if (r > 0) c.seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(r));
    AttackResult res = attack(rec, x, y, c);
    const double loss = expected_loss(rec, x + res.delta, y);
    if (loss > best_loss) {
      best_loss = loss;
      best = std::move(res);
    }
  }
  return best;
}

const std::vector<std::string>& attack_names() {
  static const std::vector<std::string> names{"pgd", "pgd-1", "apgd", "apgd-l", "arc"};
  return names;
}

namespace {

ExampleAttack maybe_restarted(AttackFn fn) {
  return [fn = std::move(fn)](const ModelEnsemble& rec, const Vector& x, int y, const AttackConfig& cfg) {
    if (cfg.init == InitKind::kRandom && cfg.restarts > 1) return with_restarts(fn, rec, x, y, cfg).l_after;
    return fn(rec, x, y, cfg).l_after;
  };
}

}  // namespace

ExampleAttack named_attack(const std::string& name) {
  if (name == "pgd") {
    return [](const ModelEnsemble& rec, const Vector& x, int y, const AttackConfig& cfg) {
      return randomized_pgd_eval(rec, x, y, cfg);
    };
  }
  if (name == "pgd-1") return maybe_restarted(pgd_first);
  if (name == "apgd") {
    return maybe_restarted(static_cast<AttackResult (*)(const ModelEnsemble&, const Vector&, int,
                                                         const AttackConfig&)>(apgd));
  }
  if (name == "apgd-l") return maybe_restarted(apgd_logits);
  if (name == "arc") return scored(arc);
  throw Error(ErrorCode::kInvalidArgument, "unknown attack '" + name + "'");
}

AttackFn named_single_attack(const std::string& name) {
  if (name == "pgd") {
    return [](const ModelEnsemble& rec, const Vector& x, int y, const AttackConfig& cfg) {
      return pgd_first(rec, x, y, cfg);
    };
  }
  if (name == "arc") return arc;
  throw Error(ErrorCode::kInvalidArgument, "unknown single-model attack '" + name + "'");
}

}  // namespace rec
