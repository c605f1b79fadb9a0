// Parallel kernels against their serial reference twins.

#include <benchmark/benchmark.h>

#include <random>

#include "petseg/kernels/kernels.hpp"
#include "petseg/kernels/reference.hpp"

using namespace petseg;

namespace {

std::vector<double> noise(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = u(rng);
  return v;
}

std::vector<std::uint8_t> bits(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution b(0.2);
  std::vector<std::uint8_t> v(n);
  for (auto& x : v) x = b(rng);
  return v;
}

struct Upsample {
  Grid src;
  Grid dst;
  std::vector<double> values;

  explicit Upsample(std::int64_t n)
      : src{{n, n, n}, {2, 2, 2}, {0, 0, 0}},
        dst{{2 * n, 2 * n, 2 * n}, {1, 1, 1}, {0, 0, 0}},
        values(noise(src.voxel_count(), 1)) {}
};

template <bool Parallel>
void BM_ResampleLinear(benchmark::State& state) {
  const Upsample u(state.range(0));
  for (auto _ : state) {
    auto out = Parallel ? kernels::resample_linear(u.src, u.values, u.dst, kernels::OutOfBounds::kClamp)
                        : kernels::reference::resample_linear(u.src, u.values, u.dst,
                                                              kernels::OutOfBounds::kClamp);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(u.dst.voxel_count()));
}

template <bool Parallel>
void BM_ResampleNearest(benchmark::State& state) {
  const Upsample u(state.range(0));
  const auto m = bits(u.src.voxel_count(), 2);
  for (auto _ : state) {
    auto out = Parallel ? kernels::resample_nearest<std::uint8_t>(u.src, m, u.dst, kernels::OutOfBounds::kZero)
                        : kernels::reference::resample_nearest<std::uint8_t>(u.src, m, u.dst,
                                                                             kernels::OutOfBounds::kZero);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(u.dst.voxel_count()));
}

template <bool Parallel>
void BM_OverlapCounts(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = bits(n * n * n, 3), b = bits(n * n * n, 4);
  for (auto _ : state) {
    auto c = Parallel ? kernels::overlap_counts(a, b) : kernels::reference::overlap_counts(a, b);
    benchmark::DoNotOptimize(c);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(a.size()));
}

template <bool Parallel>
void BM_VoxelMean(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::vector<std::vector<double>> models;
  std::vector<std::span<const double>> views;
  for (std::uint64_t k = 0; k < 5; ++k) models.push_back(noise(n * n * n, 10 + k));
  for (const auto& m : models) views.push_back(m);
  for (auto _ : state) {
    auto out = Parallel ? kernels::voxel_mean(views) : kernels::reference::voxel_mean(views);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n * n));
}

template <bool Parallel>
void BM_AccumulateWindow(benchmark::State& state) {
  const std::int64_t w = state.range(0);
  const Grid padded{{w + w / 2, w + w / 2, w + w / 2}, {1, 1, 1}, {0, 0, 0}};
  const kernels::WindowSlot slot{{w / 2, 0, w / 4}, {w, w, w}};
  const auto values = noise(static_cast<std::size_t>(w * w * w), 20);
  std::vector<double> acc(padded.voxel_count()), sum(padded.voxel_count());
  for (auto _ : state) {
    if (Parallel) {
      kernels::accumulate_window(padded, slot, values, {}, acc, sum);
    } else {
      kernels::reference::accumulate_window(padded, slot, values, {}, acc, sum);
    }
    benchmark::ClobberMemory();
  }
  state.SetItemsProcessed(state.iterations() * w * w * w);
}

}  // namespace

BENCHMARK(BM_ResampleLinear<false>)->Name("resample_linear/reference")->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ResampleLinear<true>)->Name("resample_linear/parallel")->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ResampleNearest<false>)->Name("resample_nearest/reference")->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ResampleNearest<true>)->Name("resample_nearest/parallel")->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_OverlapCounts<false>)->Name("overlap_counts/reference")->Arg(128)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_OverlapCounts<true>)->Name("overlap_counts/parallel")->Arg(128)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_VoxelMean<false>)->Name("voxel_mean/reference")->Arg(128)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_VoxelMean<true>)->Name("voxel_mean/parallel")->Arg(128)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_AccumulateWindow<false>)->Name("accumulate_window/reference")->Arg(96)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_AccumulateWindow<true>)->Name("accumulate_window/parallel")->Arg(96)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
