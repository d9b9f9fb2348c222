#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "dashgs/schedule.hpp"
#include "dashgs/spectra.hpp"

using namespace dashgs;

namespace {

Image noise(int n) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Image img(n, n, 1);
  for (double& v : img.data()) v = u(rng);
  return img;
}

void BM_Dft2(benchmark::State& state) {
  Image img = noise(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(spectra::dft2(img));
  state.SetItemsProcessed(state.iterations() * img.extent().pixels());
}
BENCHMARK(BM_Dft2)->Arg(64)->Arg(128)->Arg(256);

void BM_AntialiasDownsample(benchmark::State& state) {
  Image img = noise(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(spectra::antialias_downsample(img, 2.5));
}
BENCHMARK(BM_AntialiasDownsample)->Arg(128)->Arg(256);

void BM_BuildSchedule(benchmark::State& state) {
  std::vector<Image> views{noise(static_cast<int>(state.range(0)))};
  const auto measure = state.range(1) == 0 ? spectra::Measure::kBandLimited : spectra::Measure::kResampled;
  schedule::ScheduleOptions options;
  options.measure = measure;
  for (auto _ : state) benchmark::DoNotOptimize(schedule::ResolutionSchedule::from_views(views, 2000, options));
}
BENCHMARK(BM_BuildSchedule)->Args({128, 0})->Args({128, 1})->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
