#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "soilmark/compositor.hpp"
#include "soilmark/datetime.hpp"
#include "soilmark/synth.hpp"
#include "test_support.hpp"

using namespace soilmark;
using test_support::TempDir;

namespace {

SceneSetSpec small_spec(int scenes, double noise_sd, std::uint64_t seed,
                        double contrast = 0.05) {
  SceneSetSpec spec;
  spec.n_scenes = scenes;
  spec.width = 48;
  spec.height = 48;
  spec.noise_sd = noise_sd;
  spec.seed = seed;
  spec.features.push_back(default_palaeochannel(spec, contrast));
  return spec;
}

RegionOfInterest spec_roi(const SceneSetSpec& spec) {
  return {spec.geo.origin_x,
          spec.geo.origin_y - spec.height * spec.geo.pixel_height,
          spec.geo.origin_x + spec.width * spec.geo.pixel_width,
          spec.geo.origin_y, spec.geo.epsg};
}

// mean over mask==value pixels of one band
double masked_mean(const RasterGrid& grid, int band, const ByteImage& truth,
                   std::uint8_t value) {
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < grid.pixel_count(); ++i) {
    if (!grid.mask()[i] || truth.pixels[i] != value) continue;
    sum += grid.plane(band)[i];
    ++n;
  }
  REQUIRE(n > 0);
  return sum / static_cast<double>(n);
}

}  // namespace

TEST_CASE("noise-free generation: every scene identical, composite equals any") {
  TempDir tmp("synth_nonoise");
  SceneSetSpec spec = small_spec(3, 0.0, 7);
  SceneSetResult r = generate_scene_set(spec, tmp.path());
  REQUIRE(r.catalog.size() == 3);

  auto a = test_support::read_bytes(r.catalog.records[0].band_files.at("B2"));
  auto b = test_support::read_bytes(r.catalog.records[1].band_files.at("B2"));
  CHECK(a == b);

  CompositeStack composite =
      mean_composite(r.catalog.records, {"B2"}, spec_roi(spec));
  // composite equals the single-scene values (mean of identical observations)
  CompositeStack single =
      mean_composite({r.catalog.records[0]}, {"B2"}, spec_roi(spec));
  for (std::size_t i = 0; i < composite.grid.pixel_count(); ++i) {
    CHECK(composite.grid.plane(0)[i] ==
          doctest::Approx(single.grid.plane(0)[i]).epsilon(1e-12));
  }
}

TEST_CASE("same seed twice gives bit-identical scene files") {
  TempDir tmp1("synth_seed_a");
  TempDir tmp2("synth_seed_b");
  SceneSetSpec spec = small_spec(2, 0.03, 1234);
  SceneSetResult r1 = generate_scene_set(spec, tmp1.path());
  SceneSetResult r2 = generate_scene_set(spec, tmp2.path());
  for (std::size_t s = 0; s < r1.catalog.size(); ++s) {
    for (const auto& [band, file] : r1.catalog.records[s].band_files) {
      auto other = r2.catalog.records[s].band_files.at(band);
      CHECK(test_support::read_bytes(file) == test_support::read_bytes(other));
    }
  }
  CHECK(test_support::read_bytes(r1.ground_truth_path) ==
        test_support::read_bytes(r2.ground_truth_path));

  TempDir tmp3("synth_seed_c");
  spec.seed = 999;
  SceneSetResult r3 = generate_scene_set(spec, tmp3.path());
  CHECK(test_support::read_bytes(r1.catalog.records[0].band_files.at("B2")) !=
        test_support::read_bytes(r3.catalog.records[0].band_files.at("B2")));
}

TEST_CASE("timestamps spread over the seasonal windows and years") {
  TempDir tmp("synth_time");
  SceneSetSpec spec = small_spec(12, 0.0, 5);
  SceneSetResult r = generate_scene_set(spec, tmp.path());

  FilterSpec filter;
  filter.windows = spec.windows;
  filter.years = spec.years;
  filter.max_cloud_pct = 100.0;
  filter.roi = spec_roi(spec);

  Catalog kept = filter_catalog(r.catalog, filter);
  CHECK(kept.size() == 12);

  // all 12 (window, year) buckets are hit exactly once
  std::map<std::pair<int, int>, int> buckets;
  for (const auto& rec : kept.records) {
    int w = window_index(filter, rec.acquired_at);
    int y = civil_from_unix(rec.acquired_at).year;
    buckets[{w, y}] += 1;
  }
  CHECK(buckets.size() == 12);
  for (const auto& [key, count] : buckets) CHECK(count == 1);
}

TEST_CASE("zero-contrast features are statistically invisible") {
  TempDir tmp("synth_nocontrast");
  SceneSetSpec spec = small_spec(6, 0.02, 31, 0.0);
  SceneSetResult r = generate_scene_set(spec, tmp.path());
  CompositeStack composite =
      mean_composite(r.catalog.records, {"B8"}, spec_roi(spec));

  double inside = masked_mean(composite.grid, 0, r.ground_truth, 255);
  double outside = masked_mean(composite.grid, 0, r.ground_truth, 0);
  std::size_t n_inside = 0;
  for (auto v : r.ground_truth.pixels) n_inside += v == 255;
  double se = spec.noise_sd / std::sqrt(double(spec.n_scenes) * n_inside);
  CHECK(std::abs(inside - outside) < 3.0 * se + 1e-6);
}

TEST_CASE("planted contrast is recovered by the composite at n=12") {
  TempDir tmp("synth_recovery");
  SceneSetSpec spec = small_spec(12, 0.05, 77, 0.05);
  // widen the channel so an interior region clear of resampling blur exists
  std::get<PolylineFeature>(spec.features[0].shape).width_m = 160.0;
  SceneSetResult r = generate_scene_set(spec, tmp.path());
  CompositeStack composite =
      mean_composite(r.catalog.records, {"B8", "B12"}, spec_roi(spec));

  // Independent geometric oracle over the planted polyline: stay clear of the
  // edge band where the 20 m bands get smeared by rasterization + resampling.
  const auto& line = std::get<PolylineFeature>(spec.features[0].shape);
  auto distance_to_channel = [&](double x, double y) {
    double best = 1e300;
    for (std::size_t i = 0; i + 1 < line.points.size(); ++i) {
      double ax = line.points[i].first, ay = line.points[i].second;
      double bx = line.points[i + 1].first, by = line.points[i + 1].second;
      double dx = bx - ax, dy = by - ay;
      double len2 = dx * dx + dy * dy;
      double t = len2 > 0 ? ((x - ax) * dx + (y - ay) * dy) / len2 : 0.0;
      t = std::clamp(t, 0.0, 1.0);
      best = std::min(best, std::hypot(x - (ax + t * dx), y - (ay + t * dy)));
    }
    return best;
  };
  const double half_width = line.width_m / 2.0;
  const double margin = 30.0;  // 3 pixels at 10 m, > one 20 m cell

  auto band_delta = [&](int band, std::size_t* inside_count) {
    double sum_in = 0.0, sum_out = 0.0;
    std::size_t n_in = 0, n_out = 0;
    for (int row = 0; row < composite.grid.height(); ++row) {
      for (int col = 0; col < composite.grid.width(); ++col) {
        auto [x, y] = composite.grid.geo().pixel_center(col, row);
        double d = distance_to_channel(x, y);
        std::size_t i = std::size_t(row) * composite.grid.width() + col;
        if (!composite.grid.mask()[i]) continue;
        if (d <= half_width - margin) {
          sum_in += composite.grid.plane(band)[i];
          ++n_in;
        } else if (d >= half_width + margin) {
          sum_out += composite.grid.plane(band)[i];
          ++n_out;
        }
      }
    }
    REQUIRE(n_in > 20);
    REQUIRE(n_out > 100);
    *inside_count = n_in;
    return sum_in / n_in - sum_out / n_out;
  };

  std::size_t n_in = 0;
  double d_b8 = band_delta(0, &n_in);
  double se = spec.noise_sd / std::sqrt(double(spec.n_scenes) * n_in);
  CHECK(std::abs(d_b8 - 0.05) < 3.0 * se + 1e-4);

  double d_b12 = band_delta(1, &n_in);
  CHECK(std::abs(d_b12 + 0.05) < 3.0 * se + 1e-4);
}

TEST_CASE("ground truth marks the planted feature") {
  TempDir tmp("synth_truth");
  SceneSetSpec spec = small_spec(1, 0.0, 3);
  SceneSetResult r = generate_scene_set(spec, tmp.path());
  std::size_t inside = 0;
  for (auto v : r.ground_truth.pixels) inside += v == 255;
  CHECK(inside > 0);
  CHECK(inside < r.ground_truth.pixels.size());

  ByteImage reloaded = read_png(r.ground_truth_path);
  CHECK(reloaded.pixels == r.ground_truth.pixels);
}

TEST_CASE("generator validates its inputs") {
  TempDir tmp("synth_validate");
  SceneSetSpec spec = small_spec(1, 0.0, 3);
  spec.n_scenes = 0;
  CHECK_THROWS_AS(generate_scene_set(spec, tmp.path()), InvalidArgument);
  spec = small_spec(1, -0.5, 3);
  CHECK_THROWS_AS(generate_scene_set(spec, tmp.path()), InvalidArgument);
  spec = small_spec(1, 0.0, 3);
  spec.width = 47;  // odd
  CHECK_THROWS_AS(generate_scene_set(spec, tmp.path()), InvalidArgument);
}

TEST_CASE("20 m bands are written at half resolution") {
  TempDir tmp("synth_res");
  SceneSetSpec spec = small_spec(1, 0.0, 9);
  SceneSetResult r = generate_scene_set(spec, tmp.path());
  // the sidecar layout is ingestible and bands land at native resolutions
  Catalog cat = ingest_directory(tmp.path());
  REQUIRE(cat.size() == 1);
  CHECK(cat.records[0].band_files.size() == 6);
}
