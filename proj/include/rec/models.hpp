#pragma once

#include <memory>
#include <string>
#include <vector>

#include "rec/lp_geometry.hpp"
#include "rec/types.hpp"

namespace rec {

/// f(x) = w^T x + b, label +1 iff f(x) > 0.
class BinaryLinearClassifier {
 public:
  BinaryLinearClassifier(Vector w, double b);

  double value(const Vector& x) const;
  /// +1 iff f(x) > 0, otherwise -1 (the boundary maps to -1).
  int decide(const Vector& x) const { return value(x) > 0.0 ? 1 : -1; }

  const Vector& weights() const { return w_; }
  double bias() const { return b_; }
  Eigen::Index dim() const { return w_.size(); }
  Hyperplane boundary() const { return {w_, b_}; }

 private:
  Vector w_;
  double b_;
};

inline int blc_decide(const BinaryLinearClassifier& f, const Vector& x) { return f.decide(x); }

struct BceResult {
  double loss = 0.0;
  Vector grad;          // -y * lambda * w
  double lambda = 0.0;  // in (0, 1)
};

/// lambda = 1/2 (1 + y + (1 - y) e^f) / (1 + e^f), evaluated as sigmoid(-y f).
/// Clamped to the open interval so it stays strictly inside (0, 1) even
/// where the exact value rounds to 0 or 1 in double precision.
double bce_lambda(double logit, int y);

/// Binary cross-entropy of sigmoid(f(x)) against y in {-1, +1}, with its input gradient.
BceResult bce_loss_grad(const BinaryLinearClassifier& f, const Vector& x, int y);

/// Differentiable C-class model: logits R^D -> R^C and the D x C input Jacobian
/// whose column j is the gradient of logit j.
class MulticlassClassifier {
 public:
  virtual ~MulticlassClassifier() = default;

  virtual Eigen::Index input_dim() const = 0;
  virtual Eigen::Index class_count() const = 0;
  virtual Vector logits(const Vector& x) const = 0;
  virtual Matrix jacobian(const Vector& x) const = 0;

  /// jacobian(x) * upstream, i.e. the input gradient of upstream^T logits(x).
  virtual Vector input_gradient(const Vector& x, const Vector& upstream) const {
    return jacobian(x) * upstream;
  }
};

using ModelPtr = std::shared_ptr<const MulticlassClassifier>;

/// Index of the largest entry; ties go to the lowest index.
int argmax(const Vector& v);
/// argmax of the logits.
int predict(const MulticlassClassifier& f, const Vector& x);

Vector softmax(const Vector& logits);
double log_sum_exp(const Vector& v);
/// Softmax cross-entropy of `logits` against class y.
double cross_entropy(const Vector& logits, int y);

struct CeResult {
  double loss = 0.0;
  Vector grad;
};

/// Softmax cross-entropy and its input gradient J(x) (softmax - onehot(y)).
CeResult ce_loss_grad(const MulticlassClassifier& f, const Vector& x, int y);

enum class Activation { kTanh, kSoftplus, kIdentity };

std::string to_string(Activation a);
Activation parse_activation(const std::string& s);

struct DenseLayer {
  Matrix weight;  // out x in
  Vector bias;    // out
};

/// Fully connected network; hidden layers use a smooth activation, the last
/// layer is affine. With no hidden layers this is the multiclass linear model
/// logits = W x + b.
class MlpModel final : public MulticlassClassifier {
 public:
  MlpModel(std::vector<DenseLayer> layers, Activation activation);

  static MlpModel linear(Matrix weight, Vector bias);
  /// Glorot-uniform weights and zero biases; dims = {D, H1, ..., C}.
  static MlpModel random(const std::vector<int>& dims, Activation activation, Rng& rng);

  Eigen::Index input_dim() const override { return layers_.front().weight.cols(); }
  Eigen::Index class_count() const override { return layers_.back().weight.rows(); }
  Vector logits(const Vector& x) const override;
  /// Reverse accumulation through the layers; exact.
  Matrix jacobian(const Vector& x) const override;
  Vector input_gradient(const Vector& x, const Vector& upstream) const override;

  bool is_linear() const { return layers_.size() == 1; }
  Activation activation() const { return activation_; }
  const std::vector<DenseLayer>& layers() const { return layers_; }
  /// {D, H1, ..., C}
  std::vector<int> dims() const;

  /// Parameter and input gradients of upstream^T logits(x).
  struct Gradients {
    std::vector<DenseLayer> layers;
    Vector input;
  };
  Gradients backward(const Vector& x, const Vector& upstream) const;

  /// Training-time access; models handed out as ModelPtr are never mutated.
  std::vector<DenseLayer>& mutable_layers() { return layers_; }

 private:
  struct Tape {
    std::vector<Vector> inputs;  // input to each layer
    std::vector<Vector> pre;     // pre-activation of each hidden layer
  };
  Vector forward(const Vector& x, Tape* tape) const;
  double act(double z) const;
  double act_grad(double z) const;

  std::vector<DenseLayer> layers_;
  Activation activation_;
};

inline Matrix mlp_jacobian(const MlpModel& f, const Vector& x) { return f.jacobian(x); }

/// A binary linear classifier seen as a 2-class model with logits (0, f(x)).
/// Class 1 corresponds to label +1 and class 0 to label -1.
class BlcAsMulticlass final : public MulticlassClassifier {
 public:
  explicit BlcAsMulticlass(BinaryLinearClassifier f) : f_(std::move(f)) {}

  static int to_class(int y) { return y > 0 ? 1 : 0; }

  Eigen::Index input_dim() const override { return f_.dim(); }
  Eigen::Index class_count() const override { return 2; }
  Vector logits(const Vector& x) const override;
  Matrix jacobian(const Vector& x) const override;

  const BinaryLinearClassifier& blc() const { return f_; }

 private:
  BinaryLinearClassifier f_;
};

struct LabeledExample {
  Vector x;
  int y = 0;  // +1/-1 for binary models, class index in [0, C) otherwise
};

}  // namespace rec
