#include <doctest.h>

#include "rec/lab.hpp"
#include "test_util.hpp"

using namespace rec;

namespace {

double accuracy(const MulticlassClassifier& f, const Dataset& data) {
  int correct = 0;
  for (const auto& ex : data) correct += predict(f, ex.x) == ex.y;
  return double(correct) / double(data.size());
}

bool same_weights(const MlpModel& a, const MlpModel& b) {
  if (a.layers().size() != b.layers().size()) return false;
  for (std::size_t l = 0; l < a.layers().size(); ++l) {
    if (a.layers()[l].weight != b.layers()[l].weight || a.layers()[l].bias != b.layers()[l].bias) return false;
  }
  return true;
}

AttackConfig linf(double eps, int steps, InitKind init) {
  AttackConfig cfg;
  cfg.eps = eps;
  cfg.step_size = eps / 4;
  cfg.steps = steps;
  cfg.init = init;
  cfg.norm = LpNorm::linf();
  return cfg;
}

}  // namespace

TEST_CASE("datasets regenerate bit-identically") {
  for (const auto& tag : dataset_tags()) {
    const auto a = make_dataset(tag, 2, 2, 200, 7);
    const auto b = make_dataset(tag, 2, 2, 200, 7);
    REQUIRE(a.examples.size() == 200);
    for (std::size_t i = 0; i < a.examples.size(); ++i) {
      CHECK(a.examples[i].x == b.examples[i].x);
      CHECK(a.examples[i].y == b.examples[i].y);
    }
    CHECK(make_dataset(tag, 2, 2, 200, 8).examples[0].x != a.examples[0].x);
  }
}

TEST_CASE("datasets cover every class with finite features") {
  for (const auto& tag : dataset_tags()) {
    const auto d = make_dataset(tag, 3, 4, 30, 1);
    std::vector<int> counts(3, 0);
    for (const auto& ex : d.examples) {
      CHECK(ex.x.allFinite());
      CHECK(ex.x.size() == 4);
      ++counts[ex.y];
    }
    CHECK(counts == std::vector<int>{10, 10, 10});
    CHECK(d.classes == 3);
    CHECK(d.dim == 4);
    CHECK(d.tag == tag);
  }
}

TEST_CASE("dataset shape errors") {
  CHECK_ERROR_CODE(make_dataset("ring", 3, 2, 2, 0), ErrorCode::kInvalidArgument);
  CHECK_ERROR_CODE(make_dataset("ring", 2, 1, 10, 0), ErrorCode::kInvalidArgument);
  CHECK_ERROR_CODE(make_dataset("ring", 1, 2, 10, 0), ErrorCode::kInvalidArgument);
  CHECK_ERROR_CODE(make_dataset("gaussian-blobs", 5, 2, 10, 0), ErrorCode::kInvalidArgument);
  CHECK_ERROR_CODE(make_dataset("spiral", 2, 2, 10, 0), ErrorCode::kInvalidArgument);
}

TEST_CASE("a linear model separates well-separated blobs") {
  const auto d = make_dataset("gaussian-blobs", 2, 2, 200, 7).examples;
  TrainConfig tc;
  tc.epochs = 20;
  tc.seed = 1;
  CHECK(accuracy(train(ModelSpec{}, d, 2, tc), d) >= 0.99);
}

TEST_CASE("the ring needs a hidden layer") {
  const auto d = make_dataset("ring", 2, 2, 400, 3).examples;
  TrainConfig tc;
  tc.epochs = 40;
  tc.momentum = 0.9;
  tc.seed = 1;
  CHECK(accuracy(train(ModelSpec{}, d, 2, tc), d) <= 0.70);
  CHECK(accuracy(train(ModelSpec{{16}}, d, 2, tc), d) >= 0.95);
}

TEST_CASE("training is deterministic and zero epochs is the identity") {
  const auto d = make_dataset("xor-grid", 2, 3, 64, 2).examples;
  TrainConfig tc;
  tc.epochs = 3;
  tc.seed = 9;
  tc.momentum = 0.9;
  tc.adversarial = linf(0.1, 3, InitKind::kRandom);
  CHECK(same_weights(train(ModelSpec{{8}}, d, 2, tc), train(ModelSpec{{8}}, d, 2, tc)));

  const MlpModel init = init_model(ModelSpec{{8}}, 3, 2, 4);
  tc.epochs = 0;
  CHECK(same_weights(train(init, d, tc), init));
}

TEST_CASE("training errors") {
  const auto d = make_dataset("gaussian-blobs", 2, 2, 20, 2).examples;
  TrainConfig tc;
  tc.epochs = 5;
  Dataset huge = make_dataset("ring", 2, 2, 20, 2).examples;
  for (auto& ex : huge) ex.x *= 1e160;
  CHECK_ERROR_CODE(train(ModelSpec{}, huge, 2, tc), ErrorCode::kTrainingDiverged);
  tc = TrainConfig{};
  tc.batch = 0;
  CHECK_ERROR_CODE(train(ModelSpec{}, d, 2, tc), ErrorCode::kInvalidArgument);
  tc = TrainConfig{};
  CHECK_ERROR_CODE(train(ModelSpec{}, d, 1, tc), ErrorCode::kInvalidModel);
  CHECK_ERROR_CODE(train(ModelSpec{}, Dataset{}, 2, tc), ErrorCode::kInvalidArgument);
}

TEST_CASE("adversarial training buys robustness on blobs") {
  const auto d = make_dataset("gaussian-blobs", 2, 4, 200, 5, 2.0).examples;
  TrainConfig tc;
  tc.epochs = 20;
  tc.lr = 0.05;
  tc.momentum = 0.9;
  tc.seed = 2;
  const auto plain = train(ModelSpec{{16}}, d, 2, tc);
  tc.adversarial = linf(1.0, 10, InitKind::kRandom);
  const auto robust = train(ModelSpec{{16}}, d, 2, tc);
  const auto eval = linf(1.0, 20, InitKind::kZero);
  const double plain_acc = accuracy(plain, adversarial_examples(plain, d, eval));
  const double robust_acc = accuracy(robust, adversarial_examples(robust, d, eval));
  CHECK(robust_acc >= plain_acc + 0.10);
}

TEST_CASE("weighted pairs") {
  Rng rng(1);
  const auto a = std::make_shared<MlpModel>(MlpModel::random({2, 2}, Activation::kIdentity, rng));
  const auto b = std::make_shared<MlpModel>(MlpModel::random({2, 2}, Activation::kIdentity, rng));
  CHECK(weighted_pair(a, b, 1.0).size() == 1);
  CHECK(weighted_pair(a, b, 1.0).member(0) == a);
  CHECK(weighted_pair(a, b, 0.0).member(0) == b);
  const auto mid = weighted_pair(a, b, 0.3);
  CHECK(mid.alphas() == std::vector<double>{0.3, 0.7});
  CHECK_ERROR_CODE(weighted_pair(a, b, 1.5), ErrorCode::kInvalidArgument);
}

TEST_CASE("boosted pair: the second model only resists the first model's attack") {
  const auto train_set = make_dataset("ring", 3, 8, 200, 7).examples;
  const auto test_set = make_dataset("ring", 3, 8, 200, 1007).examples;
  TrainConfig tc;
  tc.epochs = 20;
  tc.lr = 0.05;
  tc.momentum = 0.9;
  tc.seed = 7;
  tc.adversarial = linf(0.25, 10, InitKind::kRandom);
  const auto pair = train_bat_pair(ModelSpec{{32}}, train_set, 3, tc);
  CHECK(pair.ensemble.alphas() == std::vector<double>{0.9, 0.1});

  auto eval = linf(0.25, 20, InitKind::kZero);
  eval.seed = 3;
  const Matrix m = cross_robustness_matrix({pair.first, pair.second}, named_single_attack("pgd"), test_set, eval);
  MESSAGE("cross matrix: " << m(0, 0) << " " << m(0, 1) << " / " << m(1, 0) << " " << m(1, 1));
  CHECK(m(1, 1) <= 0.15);
  CHECK(m(1, 0) >= m(1, 1) + 0.4);
  CHECK(robust_accuracy(pair.ensemble, named_attack("apgd"), test_set, eval) > m(0, 0));

  TrainConfig plain = tc;
  plain.adversarial.reset();
  CHECK_ERROR_CODE(train_bat_pair(ModelSpec{{4}}, train_set, 3, plain), ErrorCode::kInvalidArgument);
}
