#include "rec/verification.hpp"

#include <algorithm>
#include <sstream>

namespace rec {

void SuiteReport::record(bool pass, const std::string& detail) {
  ++trials;
  if (pass) {
    ++passed;
  } else {
    ++failed;
    if (first_failure.empty()) first_failure = "trial " + std::to_string(trials - 1) + ": " + detail;
  }
}

bool non_increasing(const std::vector<double>& values) {
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[i - 1]) return false;
  }
  return true;
}

namespace {

std::vector<double> random_alpha(Rng& rng, int m) {
  std::vector<double> a(static_cast<std::size_t>(m));
  double total = 0.0;
  for (double& v : a) total += (v = rng.uniform(0.05, 1.0));
  for (double& v : a) v /= total;
  return a;
}

Vector nonzero_normal(Rng& rng, Eigen::Index dim) {
  Vector v = rng.normal_vector(dim);
  while (v.cwiseAbs().maxCoeff() == 0.0) v = rng.normal_vector(dim);
  return v;
}

const LpNorm& pick(Rng& rng, const std::vector<LpNorm>& norms) {
  return norms[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(norms.size()) - 1))];
}

std::string describe(const LpNorm& norm, Eigen::Index dim, std::size_t members) {
  std::ostringstream s;
  s << "p=" << norm.name() << " D=" << dim << " M=" << members;
  return s.str();
}

}  // namespace

BlcInstance random_blc_instance(Rng& rng, int max_members, int min_dim, int max_dim,
                                const std::vector<LpNorm>& norms) {
  const auto m = static_cast<int>(rng.uniform_int(1, max_members));
  const auto dim = static_cast<Eigen::Index>(rng.uniform_int(min_dim, max_dim));
  const LpNorm norm = pick(rng, norms);
  const Vector x = 2.0 * rng.normal_vector(dim);
  const int y = rng.uniform() < 0.5 ? 1 : -1;
  std::vector<BinaryLinearClassifier> members;
  double min_zeta = kInf;
  for (int i = 0; i < m; ++i) {
    const Vector w = nonzero_normal(rng, dim);
    const double zeta = rng.uniform(0.1, 2.0);
    const double margin = zeta * norm.dual_norm(w);
    members.emplace_back(w, y * margin - w.dot(x));
    min_zeta = std::min(min_zeta, std::abs(members.back().value(x)) / norm.dual_norm(w));
  }
  return {BlcEnsemble(std::move(members), random_alpha(rng, m)), x, y, norm, min_zeta};
}

SuiteReport verify_consistency(const VerifyOptions& opt) {
  SuiteReport rep;
  rep.name = "consistency";
  Rng rng(derive_seed(opt.seed, 1));
  const std::vector<LpNorm> norms{LpNorm::l1(), LpNorm::l2(), LpNorm::linf()};
  for (int t = 0; t < opt.consistency_trials; ++t) {
    const BlcInstance inst = random_blc_instance(rng, 5, 2, 16, norms);
    const double eps = inst.min_zeta * rng.uniform(1.001, 3.0);
    const auto wrong = fooled_members(inst.rec, inst.x, inst.y);
    if (std::find(wrong.begin(), wrong.end(), true) != wrong.end() ||
        !adversarial_exists_blc(inst.rec, inst.x, inst.y, eps, inst.norm)) {
      rep.record(false, "instance generator produced an invalid trial");
      continue;
    }
    const AttackResult r = arc_blc(inst.rec, inst.x, inst.y, eps, inst.norm, 0.05, opt.beta_rule, true);
    if (!non_increasing(r.trace.accepted_values)) ++rep.monotonic_violations;
    bool norms_exact = true;
    for (double n : r.trace.candidate_norms) norms_exact = norms_exact && std::abs(n - eps) <= 1e-9 * eps;
    rep.record(r.l_after < r.l_before && norms_exact,
               describe(inst.norm, inst.x.size(), inst.rec.size()) + " l_after=" + std::to_string(r.l_after));
  }
  return rep;
}

SuiteReport verify_inconsistency(const VerifyOptions& opt) {
  SuiteReport rep;
  rep.name = "inconsistency";
  Rng rng(derive_seed(opt.seed, 2));
  const std::vector<LpNorm> norms{LpNorm::l2(), LpNorm::linf()};
  for (int t = 0; t < opt.inconsistency_trials; ++t) {
    const auto dim = static_cast<Eigen::Index>(rng.uniform_int(2, 8));
    const LpNorm norm = pick(rng, norms);
    const Vector w = nonzero_normal(rng, dim);
    const double b = rng.uniform(0.1, 2.0);
    const InconsistencyInstance inst = inconsistency_instance(w, b, norm);
    const Vector& x = inst.example.x;
    const int y = inst.example.y;

    AttackConfig cfg;
    cfg.eps = inst.eps;
    cfg.norm = norm;
    cfg.steps = 20;
    cfg.step_size = inst.eps / 4.0;
    cfg.init = InitKind::kZero;
    const AttackResult a = apgd(inst.rec, x, y, cfg);
    const AttackResult r = arc_blc(inst.rec, x, y, inst.eps, norm, 0.05, opt.beta_rule, true);
    if (!non_increasing(r.trace.accepted_values)) ++rep.monotonic_violations;
    const auto found = brute_force_adversarial(inst.rec, x, y, inst.eps, norm, 2000, derive_seed(opt.seed, t));
    const bool certified = found && is_adversarial(inst.rec, x, y, *found) && norm.norm(*found) <= inst.eps;
    rep.record(a.l_after == 1.0 && r.l_after == 0.5 && certified,
               describe(norm, dim, 2) + " apgd=" + std::to_string(a.l_after) +
                   " arc=" + std::to_string(r.l_after) + " brute=" + (certified ? "found" : "none"));
  }
  return rep;
}

SuiteReport verify_auxiliary(const VerifyOptions& opt) {
  SuiteReport rep;
  rep.name = "auxiliary-equivalence";
  Rng rng(derive_seed(opt.seed, 3));
  const std::vector<LpNorm> norms{LpNorm::l2(), LpNorm::linf()};
  for (int t = 0; t < opt.auxiliary_trials; ++t) {
    const auto m = static_cast<int>(rng.uniform_int(1, 4));
    const auto dim = static_cast<Eigen::Index>(rng.uniform_int(1, 8));
    std::vector<BinaryLinearClassifier> members;
    for (int i = 0; i < m; ++i) members.emplace_back(nonzero_normal(rng, dim), rng.normal());
    const BlcEnsemble rec(std::move(members), random_alpha(rng, m));
    const Vector x = rng.normal_vector(dim);
    const int y = rng.uniform() < 0.5 ? 1 : -1;

    AttackConfig cfg;
    cfg.norm = pick(rng, norms);
    cfg.eps = rng.uniform(0.1, 1.5);
    cfg.step_size = cfg.eps / 4.0;
    cfg.steps = 10;
    cfg.init = InitKind::kRandom;
    cfg.seed = derive_seed(opt.seed, static_cast<std::uint64_t>(t));
    cfg.record_trace = true;

    const AttackResult a = apgd(rec, x, y, cfg);
    const auto aux = auxiliary_sequence(rec, x, y, cfg);
    double dev = 0.0;
    bool lambdas_ok = true;
    for (std::size_t k = 0; k < aux.size(); ++k) {
      dev = std::max(dev, (aux[k].delta - a.trace.iterates[k]).cwiseAbs().maxCoeff());
      if (k > 0) lambdas_ok = lambdas_ok && (aux[k].lambdas.array() > 0.0).all() && (aux[k].lambdas.array() < 1.0).all();
    }
    rep.worst = std::max(rep.worst, dev);
    rep.record(dev <= kAuxiliaryTolerance && lambdas_ok && aux.size() == a.trace.iterates.size(),
               describe(cfg.norm, dim, rec.size()) + " deviation=" + std::to_string(dev));
  }
  return rep;
}

SuiteReport verify_hyperplane_distance(const VerifyOptions& opt) {
  SuiteReport rep;
  rep.name = "hyperplane_distance";
  Rng rng(derive_seed(opt.seed, 4));
  const std::vector<LpNorm> norms{LpNorm::l2(), LpNorm::linf()};
  for (int t = 0; t < opt.distance_trials; ++t) {
    const auto dim = static_cast<Eigen::Index>(rng.uniform_int(2, 3));
    const LpNorm norm = pick(rng, norms);
    const Hyperplane h{nonzero_normal(rng, dim), rng.normal()};
    const Vector x = rng.normal_vector(dim);
    const ProjectionResult proj = hyperplane_projection(h, x, norm);
    const double numeric = numeric_hyperplane_distance(h, x, norm);
    const double err = std::abs(proj.zeta - numeric);
    rep.worst = std::max(rep.worst, err);
    const double before = h.evaluate(x);
    const double after = h.evaluate(x + 1.01 * proj.zeta * proj.direction);
    const bool flips = before == 0.0 || sign(after) == -sign(before);
    rep.record(err <= kDistanceTolerance && flips,
               describe(norm, dim, 1) + " zeta=" + std::to_string(proj.zeta) + " numeric=" + std::to_string(numeric));
  }
  return rep;
}

SuiteReport verify_jacobian(const VerifyOptions& opt) {
  SuiteReport rep;
  rep.name = "jacobian";
  Rng rng(derive_seed(opt.seed, 5));
  auto check = [&](const MulticlassClassifier& f, const std::string& kind) {
    const Vector x = rng.normal_vector(f.input_dim());
    const Matrix analytic = f.jacobian(x);
    const Matrix numeric = finite_difference_jacobian(f, x, kJacobianStep);
    const double scale = std::max(numeric.cwiseAbs().maxCoeff(), 1e-12);
    const double rel = (analytic - numeric).cwiseAbs().maxCoeff() / scale;
    rep.worst = std::max(rep.worst, rel);
    rep.record(rel < kJacobianRelTolerance, kind + " relative error " + std::to_string(rel));
  };
  for (int t = 0; t < opt.jacobian_trials; ++t) {
    const auto dim = static_cast<int>(rng.uniform_int(1, 8));
    const auto classes = static_cast<int>(rng.uniform_int(2, 5));
    const auto hidden = static_cast<int>(rng.uniform_int(1, 12));
    check(BlcAsMulticlass(BinaryLinearClassifier(nonzero_normal(rng, dim), rng.normal())), "blc");
    check(MlpModel::random({dim, classes}, Activation::kIdentity, rng), "linear");
    check(MlpModel::random({dim, hidden, classes}, Activation::kTanh, rng), "mlp-tanh");
    check(MlpModel::random({dim, hidden, hidden, classes}, Activation::kSoftplus, rng), "mlp-softplus");
  }
  return rep;
}

SuiteReport verify_geometry(const VerifyOptions& opt) {
  SuiteReport rep;
  rep.name = "geometry";
  Rng rng(derive_seed(opt.seed, 6));
  for (const LpNorm& norm : {LpNorm::l1(), LpNorm::l2(), LpNorm::linf()}) {
    for (int t = 0; t < opt.geometry_trials; ++t) {
      const auto dim = static_cast<Eigen::Index>(rng.uniform_int(1, 16));
      Vector g = rng.normal_vector(dim);
      for (Eigen::Index i = 0; i < dim; ++i) {
        if (rng.uniform() < 0.1) g[i] = 0.0;
      }
      if (g.cwiseAbs().maxCoeff() == 0.0) g[0] = 1.0;

      const Vector mu = steepest_direction(g, norm);
      const double unit_err = std::abs(norm.norm(mu) - 1.0);
      rep.worst = std::max(rep.worst, unit_err);
      const double best = g.dot(mu);
      bool dominates = true;
      for (int k = 0; k < 100; ++k) {
        const Vector u = nonzero_normal(rng, dim);
        dominates = dominates && g.dot(u / norm.norm(u)) <= best + 1e-12 * norm.dual_norm(g);
      }

      bool projection_ok = true;
      if (!(norm.p() == 1.0)) {
        const Vector delta = 2.0 * rng.normal_vector(dim);
        const double eps = rng.uniform(0.0, 2.0);
        const Vector once = project_ball(delta, eps, norm);
        const Vector twice = project_ball(once, eps, norm);
        projection_ok = (once - twice).cwiseAbs().maxCoeff() <= 1e-12 * std::max(eps, 1e-300) &&
                        norm.norm(once) <= eps * (1.0 + 1e-12);
      }
      rep.record(unit_err <= kUnitNormTolerance && dominates && projection_ok,
                 "p=" + norm.name() + " D=" + std::to_string(dim));
    }
  }
  return rep;
}

SuiteReport verify_existence(const VerifyOptions& opt) {
  SuiteReport rep;
  rep.name = "existence-oracle";
  Rng rng(derive_seed(opt.seed, 7));
  const std::vector<LpNorm> norms{LpNorm::l1(), LpNorm::l2(), LpNorm::linf()};
  for (int t = 0; t < opt.existence_trials; ++t) {
    const BlcInstance inst = random_blc_instance(rng, 4, 1, 3, norms);
    const double eps = inst.min_zeta * rng.uniform(0.3, 2.0);
    const bool exact = adversarial_exists_blc(inst.rec, inst.x, inst.y, eps, inst.norm);
    const auto found = brute_force_adversarial(inst.rec, inst.x, inst.y, eps, inst.norm, 500,
                                               derive_seed(opt.seed, t));
    bool ok = !found || (exact && inst.norm.norm(*found) <= eps &&
                         is_adversarial(inst.rec, inst.x, inst.y, *found));
    if (exact) {
      const auto witness = blc_adversarial_witness(inst.rec, inst.x, inst.y, eps, inst.norm);
      ok = ok && witness && is_adversarial(inst.rec, inst.x, inst.y, *witness);
    }
    rep.record(ok, describe(inst.norm, inst.x.size(), inst.rec.size()) + (exact ? " exact=yes" : " exact=no") +
                       (found ? " brute=found" : " brute=none"));
  }
  return rep;
}

std::vector<SuiteReport> run_all_suites(const VerifyOptions& opt) {
  return {verify_consistency(opt), verify_inconsistency(opt), verify_auxiliary(opt), verify_hyperplane_distance(opt),
          verify_jacobian(opt),    verify_geometry(opt),      verify_existence(opt)};
}

}  // namespace rec
