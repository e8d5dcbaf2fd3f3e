#include <doctest.h>

#include <cmath>

#include "rec/models.hpp"
#include "rec/oracles.hpp"
#include "test_util.hpp"

using namespace rec;
using rec::test::vec;

namespace {

double rel_error(const Matrix& analytic, const Matrix& numeric) {
  return (analytic - numeric).cwiseAbs().maxCoeff() / std::max(1.0, numeric.cwiseAbs().maxCoeff());
}

// Logits are just the supplied vector, so predict can be tested on exact values.
class FixedLogits final : public MulticlassClassifier {
 public:
  explicit FixedLogits(Vector v) : v_(std::move(v)) {}
  Eigen::Index input_dim() const override { return 1; }
  Eigen::Index class_count() const override { return v_.size(); }
  Vector logits(const Vector&) const override { return v_; }
  Matrix jacobian(const Vector&) const override { return Matrix::Zero(1, v_.size()); }

 private:
  Vector v_;
};

}  // namespace

TEST_CASE("blc decisions") {
  const BinaryLinearClassifier f(vec({1, 0}), 0.0);
  CHECK(blc_decide(f, vec({2, 0})) == 1);
  CHECK(blc_decide(f, vec({-2, 0})) == -1);
  CHECK(blc_decide(f, vec({0, 0})) == -1);
  CHECK_ERROR_CODE(f.value(vec({1, 2, 3})), ErrorCode::kDimensionMismatch);
  CHECK_ERROR_CODE(BinaryLinearClassifier(vec({0, 0}), 1.0), ErrorCode::kInvalidModel);
}

TEST_CASE("predict takes argmax with lowest-index ties") {
  const Vector x = vec({0});
  CHECK(predict(FixedLogits(vec({1.0, 3.0, 2.0})), x) == 1);
  CHECK(predict(FixedLogits(vec({2.0, 2.0})), x) == 0);
}

TEST_CASE("linear model predicts argmax of Wx+b") {
  Rng rng(3);
  for (int t = 0; t < 50; ++t) {
    const Matrix W = Matrix::NullaryExpr(4, 3, [&] { return rng.normal(); });
    const Vector b = rng.normal_vector(4);
    const auto f = MlpModel::linear(W, b);
    const Vector x = rng.normal_vector(3);
    Eigen::Index direct = 0;
    (W * x + b).maxCoeff(&direct);
    CHECK(predict(f, x) == direct);
  }
}

TEST_CASE("predict is invariant to a constant logit shift") {
  Rng rng(4);
  const Matrix W = Matrix::NullaryExpr(5, 3, [&] { return rng.normal(); });
  const Vector b = rng.normal_vector(5);
  const auto f = MlpModel::linear(W, b);
  const auto shifted = MlpModel::linear(W, (b.array() + 7.25).matrix());
  for (int t = 0; t < 50; ++t) {
    const Vector x = rng.normal_vector(3);
    CHECK(predict(f, x) == predict(shifted, x));
  }
}

TEST_CASE("bce at zero logit") {
  const BinaryLinearClassifier f(vec({2, -1}), 0.0);
  const Vector x = vec({0, 0});
  const auto pos = bce_loss_grad(f, x, 1);
  CHECK(pos.lambda == doctest::Approx(0.5));
  CHECK(pos.loss == doctest::Approx(std::log(2.0)));
  CHECK(test::max_abs_diff(pos.grad, -0.5 * f.weights()) < 1e-15);
  const auto neg = bce_loss_grad(f, x, -1);
  CHECK(neg.lambda == doctest::Approx(0.5));
  CHECK(test::max_abs_diff(neg.grad, 0.5 * f.weights()) < 1e-15);
}

TEST_CASE("bce gradient matches finite differences") {
  Rng rng(9);
  for (int t = 0; t < 100; ++t) {
    const BinaryLinearClassifier f(rng.normal_vector(4), rng.normal());
    const Vector x = rng.normal_vector(4);
    const int y = t % 2 ? 1 : -1;
    const auto r = bce_loss_grad(f, x, y);
    const double h = 1e-6;
    for (int k = 0; k < 4; ++k) {
      Vector up = x, dn = x;
      up[k] += h;
      dn[k] -= h;
      const double fd = (bce_loss_grad(f, up, y).loss - bce_loss_grad(f, dn, y).loss) / (2 * h);
      CHECK(r.grad[k] == doctest::Approx(fd).epsilon(1e-6));
    }
  }
}

TEST_CASE("bce lambda stays strictly inside (0, 1) and saturates") {
  for (double logit : {-800.0, -50.0, -1.0, 0.0, 1e-300, 3.0, 50.0, 800.0}) {
    for (int y : {-1, 1}) {
      const double l = bce_lambda(logit, y);
      CHECK(l > 0.0);
      CHECK(l < 1.0);
    }
  }
  CHECK(bce_lambda(50.0, 1) < 1e-20);
  const BinaryLinearClassifier f(vec({1}), 0.0);
  const auto r = bce_loss_grad(f, vec({60}), 1);
  CHECK(r.loss < 1e-20);
  CHECK(r.grad.cwiseAbs().maxCoeff() < 1e-20);
  CHECK(std::isfinite(bce_loss_grad(f, vec({-60}), 1).loss));
  CHECK(bce_loss_grad(f, vec({-60}), 1).loss == doctest::Approx(60.0));
}

TEST_CASE("bce gradient is exactly -y lambda w") {
  Rng rng(10);
  for (int t = 0; t < 200; ++t) {
    const BinaryLinearClassifier f(rng.normal_vector(5), 5 * rng.normal());
    const Vector x = 3 * rng.normal_vector(5);
    const int y = t % 2 ? 1 : -1;
    const auto r = bce_loss_grad(f, x, y);
    CHECK(r.lambda == bce_lambda(f.value(x), y));
    CHECK(r.grad == Vector(-y * r.lambda * f.weights()));
  }
}

TEST_CASE("cross-entropy with uniform logits is log C") {
  CHECK(cross_entropy(Vector::Zero(4), 2) == doctest::Approx(std::log(4.0)));
  CHECK(cross_entropy(vec({50, -50}), 0) == doctest::Approx(0.0));
  CHECK(cross_entropy(vec({50, -50}), 1) == doctest::Approx(100.0));
  CHECK(log_sum_exp(vec({1000, 1000})) == doctest::Approx(1000.0 + std::log(2.0)));
  CHECK(softmax(vec({1000, 1000}))[0] == doctest::Approx(0.5));
}

TEST_CASE("ce gradient of a linear model is W^T (softmax - onehot)") {
  Rng rng(12);
  const Matrix W = Matrix::NullaryExpr(3, 4, [&] { return rng.normal(); });
  const Vector b = rng.normal_vector(3);
  const auto f = MlpModel::linear(W, b);
  const Vector x = rng.normal_vector(4);
  for (int y = 0; y < 3; ++y) {
    Vector upstream = softmax(W * x + b);
    upstream[y] -= 1.0;
    const auto r = ce_loss_grad(f, x, y);
    CHECK(test::max_abs_diff(r.grad, W.transpose() * upstream) < 1e-14);
    CHECK(r.loss == doctest::Approx(cross_entropy(W * x + b, y)));
  }
  CHECK_ERROR_CODE(ce_loss_grad(f, x, 3), ErrorCode::kInvalidArgument);
  CHECK_ERROR_CODE(ce_loss_grad(f, vec({1, 2}), 0), ErrorCode::kDimensionMismatch);
}

TEST_CASE("ce gradient of an mlp matches finite differences") {
  Rng rng(13);
  const auto f = MlpModel::random({5, 8, 6, 4}, Activation::kSoftplus, rng);
  for (int t = 0; t < 20; ++t) {
    const Vector x = rng.normal_vector(5);
    const int y = t % 4;
    const auto r = ce_loss_grad(f, x, y);
    const double h = 1e-5;
    for (int k = 0; k < 5; ++k) {
      Vector up = x, dn = x;
      up[k] += h;
      dn[k] -= h;
      const double fd = (cross_entropy(f.logits(up), y) - cross_entropy(f.logits(dn), y)) / (2 * h);
      CHECK(std::abs(r.grad[k] - fd) <= 1e-4 * std::max(1.0, std::abs(fd)));
    }
  }
}

TEST_CASE("linear jacobian is the transposed weight matrix") {
  Rng rng(14);
  const Matrix W = Matrix::NullaryExpr(3, 2, [&] { return rng.normal(); });
  const auto f = MlpModel::linear(W, Vector::Zero(3));
  CHECK(f.is_linear());
  CHECK(mlp_jacobian(f, vec({1, 2})) == Matrix(W.transpose()));
  CHECK(mlp_jacobian(f, vec({-7, 0.5})) == Matrix(W.transpose()));
}

TEST_CASE("identity-activation mlp is the product of its layers") {
  Rng rng(15);
  const auto f = MlpModel::random({3, 5, 4, 2}, Activation::kIdentity, rng);
  Matrix product = Matrix::Identity(3, 3);
  for (const auto& layer : f.layers()) product = layer.weight * product;
  CHECK((mlp_jacobian(f, rng.normal_vector(3)) - product.transpose()).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("mlp jacobians match central differences") {
  Rng rng(16);
  for (Activation a : {Activation::kTanh, Activation::kSoftplus}) {
    const auto f = MlpModel::random({4, 7, 5, 3}, a, rng);
    for (int t = 0; t < 20; ++t) {
      const Vector x = 2 * rng.normal_vector(4);
      CHECK(rel_error(f.jacobian(x), finite_difference_jacobian(f, x, 1e-5)) < 1e-4);
    }
  }
}

TEST_CASE("input_gradient agrees with the jacobian product") {
  Rng rng(17);
  const auto f = MlpModel::random({4, 6, 3}, Activation::kTanh, rng);
  const Vector x = rng.normal_vector(4);
  const Vector u = rng.normal_vector(3);
  CHECK(test::max_abs_diff(f.input_gradient(x, u), f.jacobian(x) * u) < 1e-13);
  CHECK(test::max_abs_diff(f.backward(x, u).input, f.jacobian(x) * u) < 1e-13);
}

TEST_CASE("mlp rejects inconsistent layer shapes") {
  std::vector<DenseLayer> layers{{Matrix::Ones(4, 3), Vector::Zero(4)}, {Matrix::Ones(2, 5), Vector::Zero(2)}};
  CHECK_ERROR_CODE(MlpModel(layers, Activation::kTanh), ErrorCode::kInvalidModel);
  CHECK_ERROR_CODE(MlpModel::linear(Matrix::Ones(1, 3), Vector::Zero(1)), ErrorCode::kInvalidModel);
  CHECK_ERROR_CODE(parse_activation("relu"), ErrorCode::kFormat);
  CHECK(parse_activation(to_string(Activation::kSoftplus)) == Activation::kSoftplus);
}

TEST_CASE("blc embedding has logits (0, f(x))") {
  const BlcAsMulticlass g(BinaryLinearClassifier(vec({1, -2}), 0.5));
  const Vector x = vec({1, 1});
  CHECK(g.logits(x) == vec({0.0, -0.5}));
  CHECK(predict(g, x) == BlcAsMulticlass::to_class(-1));
  CHECK(predict(g, vec({3, 0})) == BlcAsMulticlass::to_class(1));
  // boundary maps to class 0, i.e. label -1
  CHECK(predict(g, vec({-0.5, 0})) == 0);
  CHECK(rel_error(g.jacobian(x), finite_difference_jacobian(g, x)) < 1e-9);
}
