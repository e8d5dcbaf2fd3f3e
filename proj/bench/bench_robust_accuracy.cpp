// Serial vs OpenMP robust-accuracy kernels on a toy MLP ensemble.
// Usage: bench_robust_accuracy [n_examples] [repeats]

#include <omp.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>

#include "rec/lab.hpp"

using Clock = std::chrono::steady_clock;

namespace {

template <class F>
double time_ms(int repeats, F&& fn, double& result) {
  const auto start = Clock::now();
  for (int r = 0; r < repeats; ++r) result = fn();
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count() / repeats;
}

}  // namespace

int main(int argc, char** argv) {
  const int n = argc > 1 ? std::atoi(argv[1]) : 400;
  const int repeats = argc > 2 ? std::atoi(argv[2]) : 3;

  const auto data = rec::make_dataset("gaussian-blobs", 3, 6, n, 11, 3.0).examples;
  rec::Rng rng(5);
  std::vector<rec::ModelPtr> members;
  for (int i = 0; i < 3; ++i) {
    members.push_back(std::make_shared<rec::MlpModel>(rec::MlpModel::random({6, 32, 3}, rec::Activation::kTanh, rng)));
  }
  const rec::ModelEnsemble ens(members, {0.5, 0.3, 0.2});

  rec::AttackConfig cfg;
  cfg.eps = 0.5;
  cfg.step_size = 0.125;
  cfg.steps = 20;
  cfg.init = rec::InitKind::kRandom;
  cfg.seed = 3;

  std::printf("threads=%d examples=%d repeats=%d\n", omp_get_max_threads(), n, repeats);
  std::printf("%-8s %12s %12s %8s %s\n", "attack", "serial_ms", "omp_ms", "speedup", "identical");
  for (const char* name : {"apgd", "arc", "pgd"}) {
    const auto attack = rec::named_attack(name);
    double serial = 0.0, parallel = 0.0;
    const double ts = time_ms(repeats, [&] { return rec::robust_accuracy_serial(ens, attack, data, cfg); }, serial);
    const double tp = time_ms(repeats, [&] { return rec::robust_accuracy(ens, attack, data, cfg); }, parallel);
    std::printf("%-8s %12.2f %12.2f %8.2f %s\n", name, ts, tp, ts / tp, serial == parallel ? "yes" : "NO");
  }
  return 0;
}
