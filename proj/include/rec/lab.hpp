#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rec/attacks.hpp"

namespace rec {

struct SyntheticDataset {
  Dataset examples;
  std::string tag;
  std::uint64_t seed = 0;
  int classes = 0;
  int dim = 0;
};

/// Generators:
///   gaussian-blobs  unit-variance clusters centred at +-radius * e_k (needs C <= 2D)
///   ring            concentric shells, class c at distance in [1.5c, 1.5c + 1] (scaled by radius/4)
///   xor-grid        checkerboard on the first two coordinates, cell (i, j) -> (i + j) mod C
/// Example i has label i mod C, so every class is present whenever n >= C.
SyntheticDataset make_dataset(const std::string& tag, int classes, int dim, int n, std::uint64_t seed,
                              double radius = 4.0);

const std::vector<std::string>& dataset_tags();

struct ModelSpec {
  std::vector<int> hidden;  // empty: multiclass linear model
  Activation activation = Activation::kTanh;
};

struct TrainConfig {
  int epochs = 20;
  int batch = 32;
  double lr = 0.1;
  double momentum = 0.0;
  std::uint64_t seed = 0;
  std::optional<AttackConfig> adversarial;  // PGD examples replace each batch input

  void validate() const;
};

/// Glorot-initialized model for the given shape, drawn from Rng(seed).
MlpModel init_model(const ModelSpec& spec, int input_dim, int classes, std::uint64_t seed);

/// Minibatch SGD on softmax cross-entropy, starting from `model`.
/// Throws kTrainingDiverged when a batch loss becomes non-finite.
MlpModel train(MlpModel model, const Dataset& data, const TrainConfig& cfg);

/// init_model(spec, D, C, cfg.seed) followed by train.
MlpModel train(const ModelSpec& spec, const Dataset& data, int classes, const TrainConfig& cfg);

/// PGD perturbation of every example against a fixed model; example i uses
/// seed derive_seed(cfg.seed, i).
Dataset adversarial_examples(const MulticlassClassifier& f, const Dataset& data, const AttackConfig& cfg);

struct BatPair {
  std::shared_ptr<const MlpModel> first;
  std::shared_ptr<const MlpModel> second;
  ModelEnsemble ensemble;
};

/// f1 is adversarially trained; f2 is trained on PGD examples crafted against
/// the frozen f1 and never sees its own adversarial examples.
/// cfg.adversarial must be set.
BatPair train_bat_pair(const ModelSpec& spec, const Dataset& data, int classes, const TrainConfig& cfg,
                       std::vector<double> alpha = {0.9, 0.1});

/// The ensemble (a, 1 - a) of two models; a zero-weight member is dropped.
ModelEnsemble weighted_pair(const ModelPtr& first, const ModelPtr& second, double a);

}  // namespace rec
