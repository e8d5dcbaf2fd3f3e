#include <doctest.h>

#include <cmath>

#include "rec/arc.hpp"
#include "rec/oracles.hpp"
#include "rec/verification.hpp"
#include "test_util.hpp"

using namespace rec;
using rec::test::vec;

namespace {

AttackConfig arc_config(double eps, double eta, int steps, LpNorm norm = LpNorm::linf()) {
  AttackConfig cfg;
  cfg.eps = eps;
  cfg.step_size = eta;
  cfg.steps = steps;
  cfg.norm = norm;
  cfg.record_trace = true;
  return cfg;
}

std::shared_ptr<MlpModel> random_linear(Rng& rng, int classes, int dim) {
  const Matrix W = Matrix::NullaryExpr(classes, dim, [&] { return rng.normal(); });
  return std::make_shared<MlpModel>(MlpModel::linear(W, rng.normal_vector(classes)));
}

// Exact lp distance from x to the decision region boundary of a linear model's prediction.
double linear_margin(const MlpModel& f, const Vector& x, const LpNorm& norm) {
  const auto lin = linearize(f, x);
  double best = kInf;
  for (const auto& h : lin.hyperplanes) best = std::min(best, std::abs(h.offset) / norm.dual_norm(h.normal));
  return best;
}

}  // namespace

TEST_CASE("arc_blc on the mirrored pair reaches one half") {
  for (const LpNorm& n : {LpNorm::l2(), LpNorm::linf()}) {
    const auto inst = inconsistency_instance(vec({0.3, -1.2, 2.0}), 0.8, n);
    const auto r = arc_blc(inst.rec, inst.example.x, inst.example.y, inst.eps, n);
    CHECK(r.l_after == 0.5);
    CHECK(std::abs(n.norm(r.delta) - inst.eps) <= 1e-9);
  }
}

TEST_CASE("arc_blc fools a single member inside the radius") {
  const BinaryLinearClassifier f(vec({1, 2}), -1.0);
  const BlcEnsemble rec({f}, {1.0});
  const Vector x = vec({1, 1});
  const double zeta = hyperplane_projection(f.boundary(), x, LpNorm::l2()).zeta;
  const auto r = arc_blc(rec, x, 1, 1.1 * zeta, LpNorm::l2());
  CHECK(r.l_after == 0.0);
  CHECK(fooling_check(f, x, 1, r.delta, LpNorm::l2()));
}

TEST_CASE("arc_blc leaves a robust ensemble alone") {
  Rng rng(2);
  for (int t = 0; t < 200; ++t) {
    const auto inst = random_blc_instance(rng, 4, 2, 6, {LpNorm::l1(), LpNorm::l2(), LpNorm::linf()});
    const double eps = inst.min_zeta * rng.uniform(0.2, 1.0);
    REQUIRE_FALSE(adversarial_exists_blc(inst.rec, inst.x, inst.y, eps, inst.norm));
    const auto r = arc_blc(inst.rec, inst.x, inst.y, eps, inst.norm);
    CHECK(r.l_after == r.l_before);
  }
}

TEST_CASE("arc_blc candidates have norm eps for general p") {
  Rng rng(3);
  for (double p : {1.0, 1.5, 2.0, 3.0, kInf}) {
    const LpNorm n(p);
    for (int t = 0; t < 100; ++t) {
      const auto inst = random_blc_instance(rng, 5, 2, 10, {n});
      const double eps = inst.min_zeta * rng.uniform(1.001, 3.0);
      const auto r = arc_blc(inst.rec, inst.x, inst.y, eps, n, 0.05, BetaRule::kExact, true);
      for (double c : r.trace.candidate_norms) CHECK(std::abs(c - eps) <= 1e-9 * std::max(1.0, eps));
      CHECK(non_increasing(r.trace.accepted_values));
      CHECK(r.l_after < r.l_before);
      const double final_norm = n.norm(r.delta);
      CHECK((final_norm == 0.0 || std::abs(final_norm - eps) <= 1e-9 * std::max(1.0, eps)));
    }
  }
}

TEST_CASE("arc_blc argument checks") {
  const BlcEnsemble rec({BinaryLinearClassifier(vec({1}), 1.0)}, {1.0});
  CHECK_ERROR_CODE(arc_blc(rec, vec({0}), 1, 0.0, LpNorm::l2()), ErrorCode::kInvalidArgument);
  CHECK_ERROR_CODE(arc_blc(rec, vec({0}), 0, 1.0, LpNorm::l2()), ErrorCode::kInvalidArgument);
  CHECK_ERROR_CODE(arc_blc(rec, vec({0, 0}), 1, 1.0, LpNorm::l2()), ErrorCode::kDimensionMismatch);
}

TEST_CASE("linearization of a linear model is exact") {
  Rng rng(4);
  for (int t = 0; t < 50; ++t) {
    const auto f = random_linear(rng, 4, 3);
    const Vector x = rng.normal_vector(3);
    const auto lin = linearize(*f, x);
    CHECK(lin.label == predict(*f, x));
    REQUIRE(lin.hyperplanes.size() == 3);
    for (std::size_t k = 0; k < lin.hyperplanes.size(); ++k) {
      const auto& h = lin.hyperplanes[k];
      CHECK(h.offset > 0.0);
      // the j-boundary along the lp-optimal direction is reached exactly at distance offset / ||normal||_q
      for (const LpNorm& n : {LpNorm::l2(), LpNorm::linf()}) {
        const auto proj = hyperplane_projection(h, Vector::Zero(3), n);
        const Vector z = f->logits(x + proj.foot);
        CHECK(std::abs(z[lin.label] - z[lin.classes[k]]) <= 1e-12 * std::max(1.0, z.cwiseAbs().maxCoeff()));
      }
    }
  }
}

TEST_CASE("linearizing a binary linear classifier reproduces its boundary distance") {
  Rng rng(5);
  for (int t = 0; t < 50; ++t) {
    const BinaryLinearClassifier f(rng.normal_vector(4), rng.normal());
    const BlcAsMulticlass g(f);
    const Vector x = rng.normal_vector(4);
    const auto lin = linearize(g, x);
    REQUIRE(lin.hyperplanes.size() == 1);
    for (const LpNorm& n : {LpNorm::l1(), LpNorm::l2(), LpNorm::linf()}) {
      const double zeta = closest_hyperplane(lin.hyperplanes, n, 0).zeta;
      CHECK(zeta == doctest::Approx(hyperplane_projection(f.boundary(), x, n).zeta).epsilon(1e-12));
    }
  }
}

TEST_CASE("closest hyperplane: exact search against top-G") {
  // linf geometry: dual norms are l1 norms (1 and 8), zeta = (2, 0.5)
  const std::vector<Hyperplane> hs{{vec({1, 0}), 2.0}, {vec({4, 4}), 4.0}};
  const auto exact = closest_hyperplane(hs, LpNorm::linf(), 0);
  CHECK(exact.index == 1);
  CHECK(exact.zeta == 0.5);
  CHECK(exact.direction == vec({-1, -1}));
  CHECK(closest_hyperplane(hs, LpNorm::linf(), 2).index == 1);
  const auto approx = closest_hyperplane(hs, LpNorm::linf(), 1);
  CHECK(approx.index == 0);
  CHECK(approx.zeta == 2.0);
}

TEST_CASE("closest hyperplane ties and degenerate normals") {
  const std::vector<Hyperplane> tied{{vec({0, 2}), 1.0}, {vec({2, 0}), 1.0}};
  CHECK(closest_hyperplane(tied, LpNorm::l2(), 0).index == 0);
  const std::vector<Hyperplane> zero{{vec({0, 0}), 0.1}, {vec({1, 0}), 1.0}};
  CHECK(closest_hyperplane(zero, LpNorm::l2(), 0).index == 1);
  const std::vector<Hyperplane> all_zero{{vec({0, 0}), 0.1}};
  CHECK(closest_hyperplane(all_zero, LpNorm::l2(), 0).degenerate);
  CHECK_ERROR_CODE(closest_hyperplane({}, LpNorm::l2(), 0), ErrorCode::kInvalidArgument);
}

TEST_CASE("arc fools a single linear model exactly when its margin is inside the ball") {
  Rng rng(6);
  int fooled = 0, robust = 0;
  for (int t = 0; t < 400; ++t) {
    const LpNorm n = t % 2 ? LpNorm::l2() : LpNorm::linf();
    const auto f = random_linear(rng, t % 3 + 2, 3);
    const Vector x = rng.normal_vector(3);
    const int y = predict(*f, x);
    const double zeta = linear_margin(*f, x, n);
    const double eps = zeta * rng.uniform(0.5, 1.5);
    if (std::abs(eps - zeta) < 1e-6 * zeta) continue;
    const auto r = arc(single_model(f), x, y, arc_config(eps, eps, 1, n));
    CHECK((r.l_after == 0.0) == (zeta < eps));
    (zeta < eps ? fooled : robust) += 1;
  }
  CHECK(fooled > 50);
  CHECK(robust > 50);
}

TEST_CASE("arc cannot lower accuracy when every linear member is robust") {
  Rng rng(7);
  for (int t = 0; t < 100; ++t) {
    std::vector<ModelPtr> ms;
    const Vector x = rng.normal_vector(3);
    double margin = kInf;
    int y = -1;
    while (ms.size() < 3) {
      auto f = random_linear(rng, 4, 3);
      if (y < 0) y = predict(*f, x);
      if (predict(*f, x) != y) continue;
      margin = std::min(margin, linear_margin(*f, x, LpNorm::linf()));
      ms.push_back(f);
    }
    const ModelEnsemble rec(ms, {0.5, 0.25, 0.25});
    const double eps = 0.9 * margin;
    const auto r = arc(rec, x, y, arc_config(eps, eps, 5));
    CHECK(r.l_after == 1.0);
  }
}

TEST_CASE("arc local candidates have norm eta and accepted values never increase") {
  Rng rng(8);
  for (int t = 0; t < 40; ++t) {
    std::vector<ModelPtr> ms;
    for (int i = 0; i < 3; ++i) {
      ms.push_back(std::make_shared<MlpModel>(MlpModel::random({4, 8, 3}, Activation::kTanh, rng)));
    }
    const ModelEnsemble rec(ms, {0.2, 0.5, 0.3});
    const Vector x = rng.normal_vector(4);
    const LpNorm n = t % 2 ? LpNorm::l2() : LpNorm::linf();
    const double eps = rng.uniform(0.1, 1.0);
    const auto r = arc(rec, x, predict(*ms[1], x), arc_config(eps, eps / 2, 8, n));
    for (double c : r.trace.candidate_norms) CHECK(std::abs(c - eps / 2) <= 1e-9);
    CHECK(non_increasing(r.trace.accepted_values));
    CHECK(r.l_after <= r.l_before);
    CHECK(n.norm(r.delta) <= eps + 1e-9);
  }
}

TEST_CASE("top-G with G = C-1 is the exhaustive search") {
  Rng rng(9);
  std::vector<ModelPtr> ms;
  for (int i = 0; i < 2; ++i) {
    ms.push_back(std::make_shared<MlpModel>(MlpModel::random({5, 8, 6}, Activation::kSoftplus, rng)));
  }
  const ModelEnsemble rec(ms, {0.7, 0.3});
  for (int t = 0; t < 30; ++t) {
    const Vector x = rng.normal_vector(5);
    auto cfg = arc_config(0.6, 0.6, 5);
    const int y = predict(*ms[0], x);
    const auto full = arc(rec, x, y, cfg);
    cfg.top_g = 5;
    const auto top = arc(rec, x, y, cfg);
    CHECK(full.delta == top.delta);
    CHECK(full.trace.accepted_values == top.trace.accepted_values);
  }
}

TEST_CASE("arc with eps = 0 and degenerate members") {
  Rng rng(10);
  const auto f = random_linear(rng, 3, 2);
  auto cfg = arc_config(0.0, 0.0, 3);
  CHECK(arc(single_model(f), vec({1, 1}), 0, cfg).delta.isZero(0.0));

  // identical rows: the boundary normal between the tied classes is zero
  Matrix W(2, 2);
  W << 1, 2, 1, 2;
  const auto flat = std::make_shared<MlpModel>(MlpModel::linear(W, vec({1, 0})));
  const auto r = arc(single_model(flat), vec({0.5, 0.5}), 0, arc_config(1.0, 1.0, 2));
  CHECK(r.skipped_members == std::vector<int>{0, 0});
  CHECK(r.l_after == 1.0);
  CHECK_ERROR_CODE(arc(single_model(f), vec({1, 1}), 0, arc_config(0.5, 0.5, 1, LpNorm::l1())),
                   ErrorCode::kUnsupportedProjection);
}
