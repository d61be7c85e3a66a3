#include <benchmark/benchmark.h>

#include "fmvae/data.hpp"
#include "fmvae/riemann.hpp"
#include "fmvae/trainer.hpp"

using namespace fmvae;

namespace {

void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(1);
  const Tensor a = rng.normal_tensor({n, n});
  const Tensor b = rng.normal_tensor({n, n});
  NoGradGuard guard;
  for (auto _ : state) benchmark::DoNotOptimize(matmul(a, b));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n * n * n));
}
BENCHMARK(BM_Matmul)->Arg(64)->Arg(256);

// Forward and backward through a 256-256 ReLU network on a batch of 128.
void BM_MlpForwardBackward(benchmark::State& state) {
  Rng rng(2);
  const std::size_t hidden[] = {256, 256};
  Mlp net = Mlp::make(256, hidden, 2, rng);
  const Tensor x = rng.normal_tensor({128, 256});
  for (auto _ : state) {
    Tape::current().clear();
    backward(sum(square(net.forward(x))));
  }
}
BENCHMARK(BM_MlpForwardBackward)->Unit(benchmark::kMillisecond);

// One constrained training step with the pendulum architecture.
void BM_TrainStep(benchmark::State& state) {
  PendulumSpec spec;
  spec.count = 512;
  const Dataset data = pendulum_dataset(spec);
  Architecture arch;
  arch.data_dim = data.cols;
  Rng rng(3);
  FmvaeModel model = FmvaeModel::make(arch, rng);
  TrainConfig config;
  config.eta = state.range(0) != 0 ? 1000.0 : 0.0;
  TrainState ts = make_train_state(model, config);
  const BatchSchedule schedule(data.rows, config.batch_size, config.seed);
  std::uint64_t step = 0;
  for (auto _ : state) train_step(model, data.batch(schedule.for_step(step++)), ts, config);
}
BENCHMARK(BM_TrainStep)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_GeodesicGraph(benchmark::State& state) {
  Architecture arch;
  arch.data_dim = 256;
  Rng rng(4);
  const FmvaeModel model = FmvaeModel::make(arch, rng);
  const BoundingBox box{Eigen::Vector2d(-2, -2), Eigen::Vector2d(2, 2)};
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        build_geodesic_graph(decoder_of(model), box, static_cast<std::size_t>(state.range(0)), 12, 5));
  }
}
BENCHMARK(BM_GeodesicGraph)->Arg(900)->Arg(3600)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
