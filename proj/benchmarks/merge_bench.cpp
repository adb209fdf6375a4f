#include <benchmark/benchmark.h>

#include "spal/merge.hpp"
#include "spal/superpixel.hpp"
#include "spal/synthetic.hpp"

namespace {

// Smooth two-class field so neighbors are often mergeable.
spal::ProbMap smooth_probs(spal::Extent extent) {
  const std::size_t n = extent.area();
  std::vector<float> planes(2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    const float p = static_cast<float>(i % extent.width) / static_cast<float>(extent.width);
    planes[i] = p;
    planes[n + i] = 1.0f - p;
  }
  return spal::ProbMap(extent, 2, std::move(planes));
}

void BM_AdaptiveMerge(benchmark::State& state) {
  const auto side = static_cast<std::uint32_t>(state.range(0));
  const auto seg = spal::grid_segmentation(side, side, 4);
  const auto probs = smooth_probs(seg.extent());
  spal::MergeConfig cfg;
  cfg.epsilon = 0.1;
  for (auto _ : state) benchmark::DoNotOptimize(spal::adaptive_merge(seg, probs, cfg));
  state.counters["regions"] = seg.num_regions();
}
BENCHMARK(BM_AdaptiveMerge)->Arg(64)->Arg(256);

void BM_RegionGraph(benchmark::State& state) {
  const auto side = static_cast<std::uint32_t>(state.range(0));
  const auto seg = spal::grid_segmentation(side, side, 4);
  for (auto _ : state) benchmark::DoNotOptimize(spal::build_region_graph(seg));
}
BENCHMARK(BM_RegionGraph)->Arg(256);

}  // namespace
