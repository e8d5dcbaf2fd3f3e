#pragma once

#include <algorithm>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "rec/attack_config.hpp"
#include "rec/models.hpp"

namespace rec {

inline bool classifies_correctly(const BinaryLinearClassifier& f, const Vector& x, int y) {
  return f.decide(x) == y;
}
inline bool classifies_correctly(const ModelPtr& f, const Vector& x, int y) {
  return predict(*f, x) == y;
}
inline Eigen::Index member_input_dim(const BinaryLinearClassifier& f) { return f.dim(); }
inline Eigen::Index member_input_dim(const ModelPtr& f) { return f->input_dim(); }

/// Returns the member index i with probability alpha_i, independent of the input.
std::size_t sample_index(const std::vector<double>& alpha, Rng& rng);

/// Members plus sampling probabilities. Every alpha_i is strictly positive
/// and the weights sum to one within 1e-12.
template <class Member>
class RandomizedEnsemble {
 public:
  RandomizedEnsemble(std::vector<Member> members, std::vector<double> alpha)
      : members_(std::move(members)), alpha_(std::move(alpha)) {
    require(!members_.empty(), ErrorCode::kInvalidArgument, "ensemble needs at least one member");
    require(members_.size() == alpha_.size(), ErrorCode::kInvalidArgument,
            "ensemble: alpha has " + std::to_string(alpha_.size()) + " entries for " +
                std::to_string(members_.size()) + " members");
    double total = 0.0;
    for (double a : alpha_) {
      require(a > 0.0 && std::isfinite(a), ErrorCode::kInvalidArgument,
              "ensemble: every alpha must be positive");
      total += a;
    }
    require(std::abs(total - 1.0) <= 1e-12, ErrorCode::kInvalidArgument,
            "ensemble: alpha must sum to 1");
    for (const auto& m : members_) {
      require(member_input_dim(m) == member_input_dim(members_.front()),
              ErrorCode::kDimensionMismatch, "ensemble members disagree on input dimension");
    }
  }

  std::size_t size() const { return members_.size(); }
  const Member& member(std::size_t i) const { return members_[i]; }
  const std::vector<Member>& members() const { return members_; }
  double alpha(std::size_t i) const { return alpha_[i]; }
  const std::vector<double>& alphas() const { return alpha_; }
  Eigen::Index input_dim() const { return member_input_dim(members_.front()); }

  /// Member indices by descending alpha; equal weights keep their original order.
  std::vector<std::size_t> order_by_alpha() const {
    std::vector<std::size_t> order(size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [this](std::size_t a, std::size_t b) { return alpha_[a] > alpha_[b]; });
    return order;
  }

  std::size_t sample_member(Rng& rng) const { return sample_index(alpha_, rng); }

 private:
  std::vector<Member> members_;
  std::vector<double> alpha_;
};

using BlcEnsemble = RandomizedEnsemble<BinaryLinearClassifier>;
using ModelEnsemble = RandomizedEnsemble<ModelPtr>;

/// Exact probability that the ensemble labels x as y: sum_i alpha_i 1{member i is correct}.
template <class Member>
double expected_accuracy(const RandomizedEnsemble<Member>& rec, const Vector& x, int y) {
  double acc = 0.0;
  for (std::size_t i = 0; i < rec.size(); ++i) {
    if (classifies_correctly(rec.member(i), x, y)) acc += rec.alpha(i);
  }
  return acc;
}

/// Strict decrease of expected accuracy.
template <class Member>
bool is_adversarial(const RandomizedEnsemble<Member>& rec, const Vector& x, int y,
                    const Vector& delta) {
  return expected_accuracy(rec, x + delta, y) < expected_accuracy(rec, x, y);
}

template <class Member>
std::vector<bool> fooled_members(const RandomizedEnsemble<Member>& rec, const Vector& x, int y) {
  std::vector<bool> out(rec.size());
  for (std::size_t i = 0; i < rec.size(); ++i) out[i] = !classifies_correctly(rec.member(i), x, y);
  return out;
}

/// Fills l_after and the per-member fooled flags of `r` for x + r.delta.
template <class Member>
void finish_result(const RandomizedEnsemble<Member>& rec, const Vector& x, int y, AttackResult& r) {
  const Vector adv = x + r.delta;
  r.l_after = expected_accuracy(rec, adv, y);
  r.fooled = fooled_members(rec, adv, y);
}

ModelEnsemble single_model(ModelPtr model);
/// Each binary member becomes a 2-class model with logits (0, f(x)); labels map via BlcAsMulticlass::to_class.
ModelEnsemble as_multiclass(const BlcEnsemble& rec);

using Dataset = std::vector<LabeledExample>;

/// Runs an attack against (rec, x, y) and returns the post-attack expected accuracy.
using ExampleAttack =
    std::function<double(const ModelEnsemble&, const Vector&, int, const AttackConfig&)>;
using AttackFn =
    std::function<AttackResult(const ModelEnsemble&, const Vector&, int, const AttackConfig&)>;

ExampleAttack scored(AttackFn attack);

double clean_accuracy(const ModelEnsemble& rec, const Dataset& data);

/// Example i is attacked with seed derive_seed(cfg.seed, i); the mean is taken in
/// index order, so both versions return bit-identical values.
double robust_accuracy(const ModelEnsemble& rec, const ExampleAttack& attack, const Dataset& data,
                       const AttackConfig& cfg);
double robust_accuracy_serial(const ModelEnsemble& rec, const ExampleAttack& attack,
                              const Dataset& data, const AttackConfig& cfg);

/// Per-example post-attack expected accuracies (parallel over examples).
std::vector<double> per_example_scores(const ModelEnsemble& rec, const ExampleAttack& attack,
                                       const Dataset& data, const AttackConfig& cfg);

/// Entry (i, j): accuracy of models[i] on the data perturbed by attacking models[j] alone.
Matrix cross_robustness_matrix(const std::vector<ModelPtr>& models, const AttackFn& attack,
                               const Dataset& data, const AttackConfig& cfg);
Matrix cross_robustness_matrix_serial(const std::vector<ModelPtr>& models, const AttackFn& attack,
                                      const Dataset& data, const AttackConfig& cfg);

}  // namespace rec
