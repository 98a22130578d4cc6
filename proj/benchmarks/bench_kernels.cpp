#include <benchmark/benchmark.h>

#include <random>

#include "soilmark/decompose.hpp"
#include "soilmark/indices.hpp"
#include "soilmark/render.hpp"

namespace {

using namespace soilmark;

RasterGrid make_stack(int side, const std::vector<std::string>& bands,
                      unsigned seed) {
  GeoTransform geo{500000.0, 5000000.0, 10.0, 10.0, 32632};
  std::vector<BandDescriptor> descriptors;
  for (const auto& b : bands) descriptors.push_back(sentinel2_band(b));
  RasterGrid grid(side, side, descriptors, geo);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(0.01, 0.9);
  for (int b = 0; b < grid.band_count(); ++b) {
    for (auto& v : grid.plane(b)) v = d(rng);
  }
  return grid;
}

void bm_bsi(benchmark::State& state) {
  RasterGrid stack =
      make_stack(static_cast<int>(state.range(0)), {"B2", "B4", "B8", "B12"}, 1);
  for (auto _ : state) {
    IndexProduct p = bsi(stack);
    benchmark::DoNotOptimize(p.plane.plane(0).data());
  }
  state.SetItemsProcessed(state.iterations() * stack.pixel_count());
}
BENCHMARK(bm_bsi)->Arg(256)->Arg(512)->Arg(1024);

void bm_tct(benchmark::State& state) {
  RasterGrid stack = make_stack(static_cast<int>(state.range(0)),
                                {"B2", "B3", "B4", "B8", "B11", "B12"}, 2);
  for (auto _ : state) {
    RasterGrid out = tct(stack);
    benchmark::DoNotOptimize(out.plane(0).data());
  }
  state.SetItemsProcessed(state.iterations() * stack.pixel_count());
}
BENCHMARK(bm_tct)->Arg(256)->Arg(512)->Arg(1024);

void bm_pca(benchmark::State& state) {
  RasterGrid stack = make_stack(static_cast<int>(state.range(0)),
                                {"B2", "B3", "B4", "B8"}, 3);
  for (auto _ : state) {
    PcaResult r = pca(stack, {"B2", "B3", "B4", "B8"}, PcaMode::correlation);
    benchmark::DoNotOptimize(r.eigenvalues.data());
  }
  state.SetItemsProcessed(state.iterations() * stack.pixel_count());
}
BENCHMARK(bm_pca)->Arg(256)->Arg(512);

void bm_percentile_cut(benchmark::State& state) {
  RasterGrid stack = make_stack(static_cast<int>(state.range(0)), {"B4"}, 4);
  for (auto _ : state) {
    StretchParams p = percentile_cut(stack, 0, 2.0, 98.0);
    benchmark::DoNotOptimize(p.lower_value);
  }
}
BENCHMARK(bm_percentile_cut)->Arg(256)->Arg(512)->Arg(1024);

void bm_percentile_cut_approx(benchmark::State& state) {
  RasterGrid stack = make_stack(static_cast<int>(state.range(0)), {"B4"}, 4);
  for (auto _ : state) {
    StretchParams p = percentile_cut_approx(stack, 0, 2.0, 98.0);
    benchmark::DoNotOptimize(p.lower_value);
  }
}
BENCHMARK(bm_percentile_cut_approx)->Arg(256)->Arg(512)->Arg(1024);

void bm_stretch_to_bytes(benchmark::State& state) {
  RasterGrid stack = make_stack(static_cast<int>(state.range(0)), {"B4"}, 5);
  StretchParams p = percentile_cut(stack, 0, 2.0, 98.0);
  for (auto _ : state) {
    auto bytes = stretch_to_bytes(stack, 0, p);
    benchmark::DoNotOptimize(bytes.data());
  }
  state.SetItemsProcessed(state.iterations() * stack.pixel_count());
}
BENCHMARK(bm_stretch_to_bytes)->Arg(512)->Arg(1024);

}  // namespace

BENCHMARK_MAIN();
