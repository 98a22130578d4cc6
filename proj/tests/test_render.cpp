#include <doctest.h>

#include <fstream>
#include <random>

#include "soilmark/render.hpp"
#include "test_support.hpp"

using namespace soilmark;
using test_support::TempDir;

namespace {

RasterGrid band_of(const std::vector<double>& values, int width = 0) {
  int w = width > 0 ? width : static_cast<int>(values.size());
  int h = static_cast<int>(values.size()) / w;
  GeoTransform geo{0.0, h * 10.0, 10.0, 10.0, 32632};
  RasterGrid grid(w, h, {derived_band("x")}, geo);
  std::copy(values.begin(), values.end(), grid.plane(0).begin());
  return grid;
}

std::vector<double> ramp(int n) {
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = i;
  return v;
}

}  // namespace

TEST_CASE("percentile cut on a constant band collapses to the constant") {
  RasterGrid grid = band_of(std::vector<double>(25, 3.5), 5);
  StretchParams p = percentile_cut(grid, 0, 2.0, 98.0);
  CHECK(p.lower_value == 3.5);
  CHECK(p.upper_value == 3.5);
}

TEST_CASE("percentile cut of the 0..99 ramp at 2/98 is (1.98, 97.02)") {
  RasterGrid grid = band_of(ramp(100), 10);
  StretchParams p = percentile_cut(grid, 0, 2.0, 98.0);
  CHECK(p.lower_value == doctest::Approx(1.98).epsilon(1e-12));
  CHECK(p.upper_value == doctest::Approx(97.02).epsilon(1e-12));
}

TEST_CASE("cuts at 0/100 return the exact extremes") {
  RasterGrid grid = band_of({7.0, -2.0, 5.0, 11.0, 0.5, 3.0}, 3);
  StretchParams p = percentile_cut(grid, 0, 0.0, 100.0);
  CHECK(p.lower_value == -2.0);
  CHECK(p.upper_value == 11.0);
}

TEST_CASE("percentile cut requires valid pixels and sane percents") {
  RasterGrid grid = band_of({1.0, 2.0}, 2);
  for (auto& m : grid.mask()) m = 0;
  CHECK_THROWS_AS(percentile_cut(grid, 0, 2.0, 98.0), EmptyBand);
  RasterGrid ok = band_of({1.0, 2.0}, 2);
  CHECK_THROWS_AS(percentile_cut(ok, 0, 98.0, 2.0), InvalidArgument);
  CHECK_THROWS_AS(percentile_cut(ok, 0, -1.0, 98.0), InvalidArgument);
}

TEST_CASE("enlarging the percent interval never shrinks the value interval") {
  std::mt19937_64 rng(83);
  std::uniform_real_distribution<double> d(0.0, 1.0);
  std::vector<double> values(501);
  for (auto& v : values) v = d(rng);
  // the grid needs w*h == values.size(); use one row
  RasterGrid grid = band_of(values, static_cast<int>(values.size()));

  std::uniform_real_distribution<double> pct(0.0, 100.0);
  for (int trial = 0; trial < 100; ++trial) {
    double a = pct(rng), b = pct(rng);
    if (a > b) std::swap(a, b);
    if (a == b) continue;
    double mid = (b - a) * 0.25;
    double inner_lo = a + mid, inner_hi = b - mid;
    if (inner_lo >= inner_hi) continue;
    StretchParams outer = percentile_cut(grid, 0, a, b);
    StretchParams inner = percentile_cut(grid, 0, inner_lo, inner_hi);
    CHECK(outer.lower_value <= inner.lower_value + 1e-12);
    CHECK(outer.upper_value >= inner.upper_value - 1e-12);
  }
}

TEST_CASE("approximate cut stays within one bin width of the exact cut") {
  std::mt19937_64 rng(89);
  std::normal_distribution<double> d(10.0, 2.0);
  std::vector<double> values(4096);
  for (auto& v : values) v = d(rng);
  RasterGrid grid = band_of(values, 64);
  StretchParams exact = percentile_cut(grid, 0, 2.0, 98.0);
  StretchParams approx = percentile_cut_approx(grid, 0, 2.0, 98.0, 1024);
  auto [mn, mx] = std::minmax_element(values.begin(), values.end());
  double bin_width = (*mx - *mn) / 1024.0;
  CHECK(std::abs(exact.lower_value - approx.lower_value) <= bin_width);
  CHECK(std::abs(exact.upper_value - approx.upper_value) <= bin_width);
}

TEST_CASE("stretch_to_bytes maps endpoints, midpoints and clamps") {
  RasterGrid grid = band_of({0.0, 10.0, 2.5, 15.0, -3.0, 5.0}, 3);
  StretchParams p;
  p.lower_value = 0.0;
  p.upper_value = 10.0;
  auto bytes = stretch_to_bytes(grid, 0, p);
  CHECK(bytes[0] == 0);     // v = lo
  CHECK(bytes[1] == 255);   // v = hi
  CHECK(bytes[2] == 64);    // round(63.75) half away from zero
  CHECK(bytes[3] == 255);   // clamped above
  CHECK(bytes[4] == 0);     // clamped below
  CHECK(bytes[5] == 128);   // round(127.5) half away from zero
}

TEST_CASE("degenerate stretch maps every valid pixel to 0") {
  RasterGrid grid = band_of({4.0, 4.0, 4.0, 4.0}, 2);
  StretchParams p;
  p.lower_value = 4.0;
  p.upper_value = 4.0;
  auto bytes = stretch_to_bytes(grid, 0, p);
  for (auto b : bytes) CHECK(b == 0);
}

TEST_CASE("stretch is monotone and invariant under joint affine transforms") {
  std::mt19937_64 rng(97);
  std::uniform_real_distribution<double> d(-5.0, 5.0);
  std::vector<double> values(256);
  for (auto& v : values) v = d(rng);
  RasterGrid grid = band_of(values, 16);
  StretchParams p = percentile_cut(grid, 0, 2.0, 98.0);
  auto bytes = stretch_to_bytes(grid, 0, p);

  // monotone: sort two pixels by value, bytes must not invert
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i - 1] <= values[i]) {
      CHECK(bytes[i - 1] <= bytes[i]);
    } else {
      CHECK(bytes[i - 1] >= bytes[i]);
    }
  }

  // joint affine transform of (band, lo, hi) leaves the bytes unchanged
  const double a = 3.0, b = 7.0;
  std::vector<double> moved(values);
  for (auto& v : moved) v = a * v + b;
  RasterGrid grid2 = band_of(moved, 16);
  StretchParams p2;
  p2.lower_value = a * p.lower_value + b;
  p2.upper_value = a * p.upper_value + b;
  auto bytes2 = stretch_to_bytes(grid2, 0, p2);
  std::size_t disagreements = 0;
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    // floating-point re-rounding can move a half-case by one step
    if (bytes[i] != bytes2[i]) {
      ++disagreements;
      CHECK(std::abs(int(bytes[i]) - int(bytes2[i])) <= 1);
    }
  }
  CHECK(disagreements <= values.size() / 50);
}

TEST_CASE("histogram of a constant band has all mass in one bin") {
  RasterGrid grid = band_of(std::vector<double>(30, 2.0), 5);
  Histogram h = histogram(grid, 0, 7);
  std::uint64_t total = 0;
  int nonzero = 0;
  for (auto c : h.counts) {
    total += c;
    nonzero += c > 0;
  }
  CHECK(total == 30);
  CHECK(nonzero == 1);
  CHECK(h.valid_total == 30);
}

TEST_CASE("ramp histogram has equal bins and the max lands in the last bin") {
  RasterGrid grid = band_of(ramp(100), 10);
  Histogram h = histogram(grid, 0, 10);
  REQUIRE(h.counts.size() == 10);
  for (auto c : h.counts) CHECK(c == 10);
  CHECK(h.counts.back() == 10);  // 99 included in the closed last bin
  CHECK(h.valid_total == 100);

  std::uint64_t sum = 0;
  for (auto c : h.counts) sum += c;
  CHECK(sum == h.valid_total);
}

TEST_CASE("histogram mass equals the count of valid pixels") {
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> d(0.0, 1.0);
  std::vector<double> values(300);
  for (auto& v : values) v = d(rng);
  RasterGrid grid = band_of(values, 30);
  for (std::size_t i = 0; i < grid.pixel_count(); i += 4) grid.mask()[i] = 0;
  Histogram h = histogram(grid, 0, 13);
  std::uint64_t sum = 0;
  for (auto c : h.counts) sum += c;
  CHECK(sum == grid.valid_count());
  CHECK(h.valid_total == grid.valid_count());
}

TEST_CASE("render: constant channels produce a uniform color image") {
  GeoTransform geo{0.0, 40.0, 10.0, 10.0, 32632};
  RasterGrid grid(4, 4, {derived_band("r"), derived_band("g"), derived_band("b")},
                  geo);
  for (auto& v : grid.plane(0)) v = 0.3;
  for (auto& v : grid.plane(1)) v = 0.6;
  for (auto& v : grid.plane(2)) v = 0.9;
  std::array<StretchParams, 3> params;
  for (auto& p : params) {
    p.lower_value = 0.0;
    p.upper_value = 1.0;
  }
  ByteImage img = render(CompositeTriple{grid, TriplePreset::custom}, params);
  REQUIRE(img.channels == 3);
  for (int i = 0; i < 16; ++i) {
    CHECK(img.pixels[i * 3 + 0] == img.pixels[0]);
    CHECK(img.pixels[i * 3 + 1] == img.pixels[1]);
    CHECK(img.pixels[i * 3 + 2] == img.pixels[2]);
  }
}

TEST_CASE("grayscale render equals stretch_to_bytes") {
  std::mt19937_64 rng(103);
  std::uniform_real_distribution<double> d(0.0, 1.0);
  std::vector<double> values(64);
  for (auto& v : values) v = d(rng);
  RasterGrid grid = band_of(values, 8);
  StretchParams p = percentile_cut(grid, 0, 2.0, 98.0);
  ByteImage img = render_gray(grid, 0, p);
  auto bytes = stretch_to_bytes(grid, 0, p);
  CHECK(img.pixels == bytes);
}

TEST_CASE("triple render equals channel-wise composition") {
  std::mt19937_64 rng(107);
  std::uniform_real_distribution<double> d(0.0, 1.0);
  GeoTransform geo{0.0, 60.0, 10.0, 10.0, 32632};
  RasterGrid grid(6, 6, {derived_band("a"), derived_band("b"), derived_band("c")},
                  geo);
  for (int b = 0; b < 3; ++b) {
    for (auto& v : grid.plane(b)) v = d(rng);
  }
  std::array<StretchParams, 3> params;
  for (int b = 0; b < 3; ++b) params[b] = percentile_cut(grid, b, 2.0, 98.0);
  ByteImage img = render(CompositeTriple{grid, TriplePreset::custom}, params);
  for (int b = 0; b < 3; ++b) {
    auto bytes = stretch_to_bytes(grid, b, params[b]);
    for (std::size_t i = 0; i < bytes.size(); ++i) {
      CHECK(img.pixels[i * 3 + b] == bytes[i]);
    }
  }
}

TEST_CASE("band_report writes one png and one csv per band") {
  TempDir tmp("report");
  GeoTransform geo{0.0, 80.0, 10.0, 10.0, 32632};
  RasterGrid grid(8, 8,
                  {derived_band("PC1"), derived_band("PC2"), derived_band("PC3"),
                   derived_band("PC4")},
                  geo);
  std::mt19937_64 rng(109);
  std::uniform_real_distribution<double> d(0.0, 1.0);
  for (int b = 0; b < 4; ++b) {
    for (auto& v : grid.plane(b)) v = d(rng);
  }
  BandReportFiles files = band_report(grid, tmp.path(), "pca", 16);
  REQUIRE(files.pngs.size() == 4);
  REQUIRE(files.csvs.size() == 4);
  for (const auto& p : files.pngs) CHECK(std::filesystem::exists(p));
  for (const auto& p : files.csvs) CHECK(std::filesystem::exists(p));

  // csv counts sum to the valid pixel count
  std::ifstream csv(files.csvs[0]);
  std::string line;
  std::getline(csv, line);
  CHECK(line == "lo,hi,count");
  std::uint64_t sum = 0;
  while (std::getline(csv, line)) {
    auto last_comma = line.rfind(',');
    sum += std::stoull(line.substr(last_comma + 1));
  }
  CHECK(sum == grid.valid_count());
}

TEST_CASE("planted bimodal band shows two separated modes in its histogram") {
  std::mt19937_64 rng(113);
  std::normal_distribution<double> lo_mode(0.2, 0.01);
  std::normal_distribution<double> hi_mode(0.8, 0.01);
  std::vector<double> values(1000);
  for (std::size_t i = 0; i < values.size(); ++i) {
    values[i] = i % 2 == 0 ? lo_mode(rng) : hi_mode(rng);
  }
  RasterGrid grid = band_of(values, 50);
  Histogram h = histogram(grid, 0, 20);
  // mass at both ends, a gap in the middle
  std::uint64_t low_mass = 0, mid_mass = 0, high_mass = 0;
  for (std::size_t b = 0; b < h.counts.size(); ++b) {
    double center = (h.bin_edges[b] + h.bin_edges[b + 1]) / 2.0;
    if (center < 0.35) {
      low_mass += h.counts[b];
    } else if (center > 0.65) {
      high_mass += h.counts[b];
    } else {
      mid_mass += h.counts[b];
    }
  }
  CHECK(low_mass == 500);
  CHECK(high_mass == 500);
  CHECK(mid_mass == 0);
}
