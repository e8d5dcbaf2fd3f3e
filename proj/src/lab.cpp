#include "rec/lab.hpp"

#include <algorithm>
#include <functional>
#include <numeric>

namespace rec {

const std::vector<std::string>& dataset_tags() {
  static const std::vector<std::string> tags{"gaussian-blobs", "ring", "xor-grid"};
  return tags;
}

SyntheticDataset make_dataset(const std::string& tag, int classes, int dim, int n, std::uint64_t seed,
                              double radius) {
  require(classes >= 2, ErrorCode::kInvalidArgument, "dataset: classes must be >= 2");
  require(dim >= 2, ErrorCode::kInvalidArgument, "dataset: dim must be >= 2");
  require(n >= classes, ErrorCode::kInvalidArgument, "dataset: n must be >= classes");
  require(radius > 0.0, ErrorCode::kInvalidArgument, "dataset: radius must be positive");

  SyntheticDataset out{{}, tag, seed, classes, dim};
  out.examples.reserve(static_cast<std::size_t>(n));
  Rng rng(seed);

  if (tag == "gaussian-blobs") {
    require(classes <= 2 * dim, ErrorCode::kInvalidArgument,
            "gaussian-blobs: needs classes <= 2 * dim");
    for (int i = 0; i < n; ++i) {
      const int c = i % classes;
      Vector x = rng.normal_vector(dim);
      x[c / 2] += (c % 2 == 0 ? radius : -radius);
      out.examples.push_back({std::move(x), c});
    }
  } else if (tag == "ring") {
    const double scale = radius / 4.0;
    for (int i = 0; i < n; ++i) {
      const int c = i % classes;
      Vector dir = rng.normal_vector(dim);
      while (dir.norm() == 0.0) dir = rng.normal_vector(dim);
      const double r = scale * rng.uniform(1.5 * c, 1.5 * c + 1.0);
      out.examples.push_back({Vector(dir * (r / dir.norm())), c});
    }
  } else if (tag == "xor-grid") {
    // 4 x 4 cells of side radius/2 on the first two coordinates; samples stay
    // 10% away from cell edges. Remaining coordinates are small noise.
    const double side = radius / 2.0;
    int produced = 0;
    while (produced < n) {
      const int want = produced % classes;
      const auto i = static_cast<int>(rng.uniform_int(0, 3));
      const auto j = static_cast<int>(rng.uniform_int(0, 3));
      if ((i + j) % classes != want) continue;
      Vector x = 0.1 * rng.normal_vector(dim);
      x[0] = side * (i - 2 + rng.uniform(0.1, 0.9));
      x[1] = side * (j - 2 + rng.uniform(0.1, 0.9));
      out.examples.push_back({std::move(x), want});
      ++produced;
    }
  } else {
    throw Error(ErrorCode::kInvalidArgument, "unknown dataset generator '" + tag + "'");
  }
  return out;
}

void TrainConfig::validate() const {
  require(epochs >= 0, ErrorCode::kInvalidArgument, "train: epochs must be >= 0");
  require(batch >= 1, ErrorCode::kInvalidArgument, "train: batch must be >= 1");
  require(lr > 0.0 && std::isfinite(lr), ErrorCode::kInvalidArgument, "train: lr must be positive");
  require(momentum >= 0.0 && momentum < 1.0, ErrorCode::kInvalidArgument,
          "train: momentum must be in [0, 1)");
  if (adversarial) adversarial->validate();
}

MlpModel init_model(const ModelSpec& spec, int input_dim, int classes, std::uint64_t seed) {
  std::vector<int> dims{input_dim};
  dims.insert(dims.end(), spec.hidden.begin(), spec.hidden.end());
  dims.push_back(classes);
  Rng rng(seed);
  return MlpModel::random(dims, spec.hidden.empty() ? Activation::kIdentity : spec.activation, rng);
}

namespace {

// Input actually fed to the gradient step for example `ex` under model `current`.
using Crafter = std::function<Vector(const MlpModel& current, const LabeledExample& ex, std::uint64_t seed)>;

MlpModel fit(MlpModel model, const Dataset& data, const TrainConfig& cfg, const Crafter& craft) {
  cfg.validate();
  require(!data.empty() || cfg.epochs == 0, ErrorCode::kInvalidArgument, "train: empty dataset");
  for (const auto& ex : data) {
    require_same_dim(model.input_dim(), ex.x.size(), "train");
    require(ex.y >= 0 && ex.y < model.class_count(), ErrorCode::kInvalidArgument,
            "train: label out of range");
  }

  auto& layers = model.mutable_layers();
  std::vector<DenseLayer> velocity;
  for (const auto& l : layers) velocity.push_back({Matrix::Zero(l.weight.rows(), l.weight.cols()), Vector::Zero(l.bias.size())});

  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  Rng shuffle_rng(derive_seed(cfg.seed, 1));
  const std::uint64_t craft_root = derive_seed(cfg.seed, 2);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    // Fisher-Yates with our own generator; std::shuffle is not portable.
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[static_cast<std::size_t>(shuffle_rng.uniform_int(0, static_cast<std::int64_t>(i) - 1))]);
    }
    const std::uint64_t epoch_seed = derive_seed(craft_root, static_cast<std::uint64_t>(epoch));

    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch)) {
      const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch));
      std::vector<DenseLayer> grad;
      for (const auto& l : layers) grad.push_back({Matrix::Zero(l.weight.rows(), l.weight.cols()), Vector::Zero(l.bias.size())});
      double loss = 0.0;

      for (std::size_t k = start; k < stop; ++k) {
        const LabeledExample& ex = data[order[k]];
        const Vector input = craft ? craft(model, ex, derive_seed(epoch_seed, order[k])) : ex.x;
        const Vector z = model.logits(input);
        loss += cross_entropy(z, ex.y);
        Vector upstream = softmax(z);
        upstream[ex.y] -= 1.0;
        const auto g = model.backward(input, upstream);
        for (std::size_t l = 0; l < layers.size(); ++l) {
          grad[l].weight += g.layers[l].weight;
          grad[l].bias += g.layers[l].bias;
        }
      }
      const double scale = 1.0 / static_cast<double>(stop - start);
      if (!std::isfinite(loss)) {
        throw Error(ErrorCode::kTrainingDiverged, "training diverged at epoch " + std::to_string(epoch));
      }
      for (std::size_t l = 0; l < layers.size(); ++l) {
        velocity[l].weight = cfg.momentum * velocity[l].weight + scale * grad[l].weight;
        velocity[l].bias = cfg.momentum * velocity[l].bias + scale * grad[l].bias;
        layers[l].weight -= cfg.lr * velocity[l].weight;
        layers[l].bias -= cfg.lr * velocity[l].bias;
        if (!layers[l].weight.allFinite() || !layers[l].bias.allFinite()) {
          throw Error(ErrorCode::kTrainingDiverged, "training diverged at epoch " + std::to_string(epoch));
        }
      }
    }
  }
  return model;
}

Crafter pgd_crafter(const AttackConfig& adv, const MlpModel* frozen) {
  return [adv, frozen](const MlpModel& current, const LabeledExample& ex, std::uint64_t seed) {
    AttackConfig c = adv;
    c.seed = seed;
    const MlpModel& target = frozen ? *frozen : current;
    return Vector(ex.x + pgd(target, ex.x, ex.y, c).delta);
  };
}

}  // namespace

MlpModel train(MlpModel model, const Dataset& data, const TrainConfig& cfg) {
  Crafter craft;
  if (cfg.adversarial) craft = pgd_crafter(*cfg.adversarial, nullptr);
  return fit(std::move(model), data, cfg, craft);
}

MlpModel train(const ModelSpec& spec, const Dataset& data, int classes, const TrainConfig& cfg) {
  require(!data.empty(), ErrorCode::kInvalidArgument, "train: empty dataset");
  return train(init_model(spec, static_cast<int>(data.front().x.size()), classes, cfg.seed), data, cfg);
}

Dataset adversarial_examples(const MulticlassClassifier& f, const Dataset& data, const AttackConfig& cfg) {
  Dataset out(data.size());
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < data.size(); ++i) {
    AttackConfig c = cfg;
    c.seed = derive_seed(cfg.seed, i);
    out[i] = {data[i].x + pgd(f, data[i].x, data[i].y, c).delta, data[i].y};
  }
  return out;
}

BatPair train_bat_pair(const ModelSpec& spec, const Dataset& data, int classes, const TrainConfig& cfg,
                       std::vector<double> alpha) {
  require(cfg.adversarial.has_value(), ErrorCode::kInvalidArgument,
          "train_bat_pair: an adversarial attack config is required");
  require(alpha.size() == 2, ErrorCode::kInvalidArgument, "train_bat_pair: alpha needs two entries");
  auto first = std::make_shared<const MlpModel>(train(spec, data, classes, cfg));

  TrainConfig second_cfg = cfg;
  second_cfg.seed = derive_seed(cfg.seed, 0x5ec0'0d);
  const int dim = static_cast<int>(data.front().x.size());
  MlpModel second_init = init_model(spec, dim, classes, second_cfg.seed);
  auto second = std::make_shared<const MlpModel>(
      fit(std::move(second_init), data, second_cfg, pgd_crafter(*cfg.adversarial, first.get())));

  ModelEnsemble ens({first, second}, std::move(alpha));
  return {first, second, std::move(ens)};
}

ModelEnsemble weighted_pair(const ModelPtr& first, const ModelPtr& second, double a) {
  require(a >= 0.0 && a <= 1.0, ErrorCode::kInvalidArgument, "alpha must lie in [0, 1]");
  if (a == 1.0) return single_model(first);
  if (a == 0.0) return single_model(second);
  return ModelEnsemble({first, second}, {a, 1.0 - a});
}

}  // namespace rec
