#include "rec/ensemble.hpp"

#include <exception>
#include <mutex>


namespace rec {

std::size_t sample_index(const std::vector<double>& alpha, Rng& rng) {
  const double u = rng.uniform();
  double cum = 0.0;
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    cum += alpha[i];
    if (u < cum) return i;
  }
  return alpha.size() - 1;
}

ModelEnsemble single_model(ModelPtr model) { return ModelEnsemble({std::move(model)}, {1.0}); }

ModelEnsemble as_multiclass(const BlcEnsemble& rec) {
  std::vector<ModelPtr> members;
  for (const auto& f : rec.members()) members.push_back(std::make_shared<BlcAsMulticlass>(f));
  return ModelEnsemble(std::move(members), rec.alphas());
}

ExampleAttack scored(AttackFn attack) {
  return [attack = std::move(attack)](const ModelEnsemble& rec, const Vector& x, int y,
                                      const AttackConfig& cfg) { return attack(rec, x, y, cfg).l_after; };
}

double clean_accuracy(const ModelEnsemble& rec, const Dataset& data) {
  require(!data.empty(), ErrorCode::kInvalidArgument, "empty dataset");
  double total = 0.0;
  for (const auto& ex : data) total += expected_accuracy(rec, ex.x, ex.y);
  return total / static_cast<double>(data.size());
}

namespace {

AttackConfig example_config(const AttackConfig& cfg, std::size_t index) {
  AttackConfig c = cfg;
  c.seed = derive_seed(cfg.seed, index);
  return c;
}

double mean_in_order(const std::vector<double>& v) {
  double total = 0.0;
  for (double s : v) total += s;
  return total / static_cast<double>(v.size());
}

// Rethrows the failure of the lowest-index example so parallel and serial runs
// report the same error.
class FirstError {
 public:
  void capture(std::size_t index) {
    std::lock_guard<std::mutex> lock(mu_);
    if (!error_ || index < index_) {
      error_ = std::current_exception();
      index_ = index;
    }
  }
  void rethrow() const {
    if (error_) std::rethrow_exception(error_);
  }

 private:
  std::mutex mu_;
  std::exception_ptr error_;
  std::size_t index_ = 0;
};

void check_dataset(const ModelEnsemble& rec, const Dataset& data) {
  require(!data.empty(), ErrorCode::kInvalidArgument, "empty dataset");
  for (const auto& ex : data) require_same_dim(rec.input_dim(), ex.x.size(), "dataset example");
}

}  // namespace

std::vector<double> per_example_scores(const ModelEnsemble& rec, const ExampleAttack& attack,
                                       const Dataset& data, const AttackConfig& cfg) {
  check_dataset(rec, data);
  std::vector<double> scores(data.size());
  FirstError err;
  const auto n = static_cast<std::int64_t>(data.size());
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t i = 0; i < n; ++i) {
    try {
      const auto& ex = data[i];
      scores[i] = attack(rec, ex.x, ex.y, example_config(cfg, i));
    } catch (...) {
      err.capture(i);
    }
  }
  err.rethrow();
  return scores;
}

double robust_accuracy(const ModelEnsemble& rec, const ExampleAttack& attack, const Dataset& data,
                       const AttackConfig& cfg) {
  return mean_in_order(per_example_scores(rec, attack, data, cfg));
}

double robust_accuracy_serial(const ModelEnsemble& rec, const ExampleAttack& attack,
                              const Dataset& data, const AttackConfig& cfg) {
  check_dataset(rec, data);
  std::vector<double> scores(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    scores[i] = attack(rec, data[i].x, data[i].y, example_config(cfg, i));
  }
  return mean_in_order(scores);
}

namespace {

// Row i of the result: model i correct on the perturbation crafted against model j.
Matrix cross_column_hits(const std::vector<ModelEnsemble>& singles, const AttackFn& attack,
                         const LabeledExample& ex, const AttackConfig& cfg) {
  const std::size_t m = singles.size();
  Matrix hits = Matrix::Zero(m, m);
  for (std::size_t j = 0; j < m; ++j) {
    const Vector adv = ex.x + attack(singles[j], ex.x, ex.y, cfg).delta;
    for (std::size_t i = 0; i < m; ++i) {
      hits(i, j) = classifies_correctly(singles[i].member(0), adv, ex.y) ? 1.0 : 0.0;
    }
  }
  return hits;
}

std::vector<ModelEnsemble> singles_of(const std::vector<ModelPtr>& models, const Dataset& data) {
  require(!models.empty(), ErrorCode::kInvalidArgument, "cross-robustness needs at least one model");
  require(!data.empty(), ErrorCode::kInvalidArgument, "empty dataset");
  std::vector<ModelEnsemble> singles;
  for (const auto& m : models) singles.push_back(single_model(m));
  return singles;
}

Matrix sum_in_order(const std::vector<Matrix>& hits, std::size_t m) {
  Matrix total = Matrix::Zero(m, m);
  for (const auto& h : hits) total += h;
  return total / static_cast<double>(hits.size());
}

}  // namespace

Matrix cross_robustness_matrix(const std::vector<ModelPtr>& models, const AttackFn& attack,
                               const Dataset& data, const AttackConfig& cfg) {
  const auto singles = singles_of(models, data);
  std::vector<Matrix> hits(data.size());
  FirstError err;
  const auto n = static_cast<std::int64_t>(data.size());
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t i = 0; i < n; ++i) {
    try {
      hits[i] = cross_column_hits(singles, attack, data[i], example_config(cfg, i));
    } catch (...) {
      err.capture(i);
    }
  }
  err.rethrow();
  return sum_in_order(hits, models.size());
}

Matrix cross_robustness_matrix_serial(const std::vector<ModelPtr>& models, const AttackFn& attack,
                                      const Dataset& data, const AttackConfig& cfg) {
  const auto singles = singles_of(models, data);
  std::vector<Matrix> hits;
  for (std::size_t i = 0; i < data.size(); ++i) {
    hits.push_back(cross_column_hits(singles, attack, data[i], example_config(cfg, i)));
  }
  return sum_in_order(hits, models.size());
}

}  // namespace rec
