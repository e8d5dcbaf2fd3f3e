#include "rec/models.hpp"

#include <algorithm>

namespace rec {

namespace {

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

}  // namespace

BinaryLinearClassifier::BinaryLinearClassifier(Vector w, double b) : w_(std::move(w)), b_(b) {
  require(w_.size() > 0 && w_.cwiseAbs().maxCoeff() > 0.0, ErrorCode::kInvalidModel,
          "binary linear classifier needs a nonzero weight vector");
  require(w_.allFinite() && std::isfinite(b_), ErrorCode::kInvalidModel,
          "binary linear classifier parameters must be finite");
}

double BinaryLinearClassifier::value(const Vector& x) const {
  require_same_dim(w_.size(), x.size(), "BinaryLinearClassifier");
  return w_.dot(x) + b_;
}

double bce_lambda(double logit, int y) {
  static constexpr double kLo = std::numeric_limits<double>::denorm_min();
  static const double kHi = std::nextafter(1.0, 0.0);
  return std::clamp(sigmoid(-y * logit), kLo, kHi);
}

BceResult bce_loss_grad(const BinaryLinearClassifier& f, const Vector& x, int y) {
  require(y == 1 || y == -1, ErrorCode::kInvalidArgument, "binary label must be +1 or -1");
  const double logit = f.value(x);
  BceResult out;
  out.loss = softplus(-y * logit);
  out.lambda = bce_lambda(logit, y);
  out.grad = (-y * out.lambda) * f.weights();
  return out;
}

int argmax(const Vector& v) {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return static_cast<int>(best);
}

int predict(const MulticlassClassifier& f, const Vector& x) {
  require_same_dim(f.input_dim(), x.size(), "predict");
  return argmax(f.logits(x));
}

double log_sum_exp(const Vector& v) {
  const double m = v.maxCoeff();
  return m + std::log((v.array() - m).exp().sum());
}

Vector softmax(const Vector& logits) {
  const Vector e = (logits.array() - logits.maxCoeff()).exp();
  return e / e.sum();
}

double cross_entropy(const Vector& logits, int y) { return log_sum_exp(logits) - logits[y]; }

CeResult ce_loss_grad(const MulticlassClassifier& f, const Vector& x, int y) {
  require_same_dim(f.input_dim(), x.size(), "ce_loss_grad");
  require(y >= 0 && y < f.class_count(), ErrorCode::kInvalidArgument, "class label out of range");
  const Vector z = f.logits(x);
  Vector upstream = softmax(z);
  upstream[y] -= 1.0;
  return {cross_entropy(z, y), f.input_gradient(x, upstream)};
}

std::string to_string(Activation a) {
  switch (a) {
    case Activation::kTanh: return "tanh";
    case Activation::kSoftplus: return "softplus";
    case Activation::kIdentity: return "identity";
  }
  return "?";
}

Activation parse_activation(const std::string& s) {
  if (s == "tanh") return Activation::kTanh;
  if (s == "softplus") return Activation::kSoftplus;
  if (s == "identity") return Activation::kIdentity;
  throw Error(ErrorCode::kFormat, "unknown activation '" + s + "'");
}

MlpModel::MlpModel(std::vector<DenseLayer> layers, Activation activation)
    : layers_(std::move(layers)), activation_(activation) {
  require(!layers_.empty(), ErrorCode::kInvalidModel, "model needs at least one layer");
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& layer = layers_[l];
    require(layer.weight.rows() == layer.bias.size() && layer.weight.rows() > 0 &&
                layer.weight.cols() > 0,
            ErrorCode::kInvalidModel, "layer " + std::to_string(l) + " has inconsistent shape");
    if (l > 0) {
      require(layer.weight.cols() == layers_[l - 1].weight.rows(), ErrorCode::kInvalidModel,
              "layer " + std::to_string(l) + " input does not match previous output");
    }
  }
  require(class_count() >= 2, ErrorCode::kInvalidModel, "model needs at least two classes");
}

MlpModel MlpModel::linear(Matrix weight, Vector bias) {
  return MlpModel({DenseLayer{std::move(weight), std::move(bias)}}, Activation::kIdentity);
}

MlpModel MlpModel::random(const std::vector<int>& dims, Activation activation, Rng& rng) {
  require(dims.size() >= 2, ErrorCode::kInvalidModel, "dims must list input and output sizes");
  std::vector<DenseLayer> layers;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const int in = dims[l], out = dims[l + 1];
    require(in > 0 && out > 0, ErrorCode::kInvalidModel, "layer sizes must be positive");
    const double limit = std::sqrt(6.0 / (in + out));
    DenseLayer layer{Matrix(out, in), Vector::Zero(out)};
    for (int r = 0; r < out; ++r)
      for (int c = 0; c < in; ++c) layer.weight(r, c) = rng.uniform(-limit, limit);
    layers.push_back(std::move(layer));
  }
  return MlpModel(std::move(layers), activation);
}

std::vector<int> MlpModel::dims() const {
  std::vector<int> d{static_cast<int>(input_dim())};
  for (const auto& layer : layers_) d.push_back(static_cast<int>(layer.weight.rows()));
  return d;
}

double MlpModel::act(double z) const {
  switch (activation_) {
    case Activation::kTanh: return std::tanh(z);
    case Activation::kSoftplus: return softplus(z);
    case Activation::kIdentity: return z;
  }
  return z;
}

double MlpModel::act_grad(double z) const {
  switch (activation_) {
    case Activation::kTanh: {
      const double t = std::tanh(z);
      return 1.0 - t * t;
    }
    case Activation::kSoftplus: return sigmoid(z);
    case Activation::kIdentity: return 1.0;
  }
  return 1.0;
}

Vector MlpModel::forward(const Vector& x, Tape* tape) const {
  require_same_dim(input_dim(), x.size(), "MlpModel");
  Vector a = x;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    if (tape) tape->inputs.push_back(a);
    Vector z = layers_[l].weight * a + layers_[l].bias;
    if (l + 1 == layers_.size()) return z;
    if (tape) tape->pre.push_back(z);
    a = z.unaryExpr([this](double v) { return act(v); });
  }
  return a;
}

Vector MlpModel::logits(const Vector& x) const { return forward(x, nullptr); }

Matrix MlpModel::jacobian(const Vector& x) const {
  Tape tape;
  forward(x, &tape);
  // Rows of d(logits)/d(layer input), propagated from the output back to x.
  Matrix rows = layers_.back().weight;
  for (std::size_t l = layers_.size() - 1; l-- > 0;) {
    const Vector d = tape.pre[l].unaryExpr([this](double v) { return act_grad(v); });
    rows = (rows * d.asDiagonal()) * layers_[l].weight;
  }
  return rows.transpose();
}

MlpModel::Gradients MlpModel::backward(const Vector& x, const Vector& upstream) const {
  require_same_dim(class_count(), upstream.size(), "MlpModel::backward");
  Tape tape;
  forward(x, &tape);
  Gradients g;
  g.layers.resize(layers_.size());
  Vector delta = upstream;
  for (std::size_t l = layers_.size(); l-- > 0;) {
    g.layers[l].weight = delta * tape.inputs[l].transpose();
    g.layers[l].bias = delta;
    Vector back = layers_[l].weight.transpose() * delta;
    if (l > 0) {
      back.array() *= tape.pre[l - 1].unaryExpr([this](double v) { return act_grad(v); }).array();
    }
    delta = std::move(back);
  }
  g.input = std::move(delta);
  return g;
}

Vector MlpModel::input_gradient(const Vector& x, const Vector& upstream) const {
  require_same_dim(class_count(), upstream.size(), "MlpModel::input_gradient");
  Tape tape;
  forward(x, &tape);
  Vector delta = upstream;
  for (std::size_t l = layers_.size(); l-- > 0;) {
    Vector back = layers_[l].weight.transpose() * delta;
    if (l > 0) {
      back.array() *= tape.pre[l - 1].unaryExpr([this](double v) { return act_grad(v); }).array();
    }
    delta = std::move(back);
  }
  return delta;
}

Vector BlcAsMulticlass::logits(const Vector& x) const {
  Vector z(2);
  z << 0.0, f_.value(x);
  return z;
}

Matrix BlcAsMulticlass::jacobian(const Vector& x) const {
  require_same_dim(f_.dim(), x.size(), "BlcAsMulticlass");
  Matrix j = Matrix::Zero(f_.dim(), 2);
  j.col(1) = f_.weights();
  return j;
}

}  // namespace rec
