#include <benchmark/benchmark.h>

#include <cmath>
#include <random>

#include "dashgs/splat2d.hpp"

using namespace dashgs;
using namespace dashgs::splat;

namespace {

SplatModel scene(int n) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  SplatModel m;
  const double sigma = 1.0 / std::sqrt(static_cast<double>(n));
  for (int i = 0; i < n; ++i) {
    Gaussian2D g;
    g.pos = {u(rng), u(rng)};
    g.log_scale = {std::log(sigma * (0.5 + u(rng))), std::log(sigma * (0.5 + u(rng)))};
    g.rotation = 3.0 * u(rng);
    g.opacity_raw = u(rng) * 2.0 - 1.0;
    g.color_raw = {u(rng) - 0.5, u(rng) - 0.5, u(rng) - 0.5};
    m.primitives.push_back(g);
  }
  return m;
}

void BM_Render(benchmark::State& state) {
  SplatModel m = scene(static_cast<int>(state.range(0)));
  const int side = static_cast<int>(state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(render(m, side, side));
  state.SetItemsProcessed(state.iterations() * side * side);
}
BENCHMARK(BM_Render)->Args({200, 128})->Args({2000, 128})->Args({2000, 64})->Unit(benchmark::kMillisecond);

void BM_RenderLossGrad(benchmark::State& state) {
  SplatModel m = scene(static_cast<int>(state.range(0)));
  const int side = static_cast<int>(state.range(1));
  Image target(side, side, 3, 0.5);
  for (auto _ : state) benchmark::DoNotOptimize(render_loss_grad(m, target, side, side));
  state.SetItemsProcessed(state.iterations() * side * side);
}
BENCHMARK(BM_RenderLossGrad)
    ->Args({200, 128})
    ->Args({2000, 128})
    ->Args({2000, 64})
    ->Args({2000, 32})
    ->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
