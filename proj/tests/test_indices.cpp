#include <doctest.h>

#include <random>

#include "soilmark/indices.hpp"

using namespace soilmark;

namespace {

// One-pixel-per-tuple stack over the named bands.
RasterGrid stack_from_tuples(const std::vector<std::string>& bands,
                             const std::vector<std::vector<double>>& tuples) {
  GeoTransform geo{0.0, tuples.size() * 10.0, 10.0, 10.0, 32632};
  std::vector<BandDescriptor> descriptors;
  for (const auto& b : bands) descriptors.push_back(sentinel2_band(b));
  RasterGrid grid(1, static_cast<int>(tuples.size()), descriptors, geo);
  for (std::size_t i = 0; i < tuples.size(); ++i) {
    for (std::size_t b = 0; b < bands.size(); ++b) {
      grid.plane(b)[i] = tuples[i][b];
    }
  }
  return grid;
}

const std::vector<std::string> kBsiBands = {"B2", "B4", "B8", "B12"};

double bsi_oracle(double blue, double red, double nir, double swir2) {
  return ((red + swir2) - (nir + blue)) / ((red + swir2) + (nir + blue));
}

}  // namespace

TEST_CASE("bsi matches the published formula") {
  // tuples are (B2, B4, B8, B12) = (Blue, Red, NIR, SWIR2)
  RasterGrid stack = stack_from_tuples(
      kBsiBands, {{0.3, 0.3, 0.3, 0.3}, {0.1, 0.3, 0.2, 0.4}, {0.0, 0.3, 0.0, 0.4}});
  IndexProduct p = bsi(stack);
  CHECK(p.plane.plane(0)[0] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(p.plane.plane(0)[1] == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(p.plane.plane(0)[1] ==
        doctest::Approx(bsi_oracle(0.1, 0.3, 0.2, 0.4)).epsilon(1e-12));
  // NIR = Blue = 0 attains the upper bound
  CHECK(p.plane.plane(0)[2] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(p.index_name == "BSI");
  CHECK(p.formula_id == "((B4+B12)-(B8+B2))/((B4+B12)+(B8+B2))");
}

TEST_CASE("ndvi matches the standard formula") {
  RasterGrid stack = stack_from_tuples(
      {"B4", "B8"}, {{0.2, 0.2}, {0.1, 0.5}, {0.0, 0.3}});
  IndexProduct p = ndvi(stack);
  CHECK(p.plane.plane(0)[0] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(p.plane.plane(0)[1] == doctest::Approx(0.4 / 0.6).epsilon(1e-12));
  CHECK(p.plane.plane(0)[2] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("missing bands are reported by name") {
  RasterGrid stack = stack_from_tuples({"B4", "B8"}, {{0.2, 0.3}});
  CHECK_THROWS_AS(bsi(stack), MissingBand);
  RasterGrid no_nir = stack_from_tuples({"B2", "B4", "B12"}, {{0.1, 0.2, 0.3}});
  CHECK_THROWS_AS(ndvi(no_nir), MissingBand);
}

TEST_CASE("zero denominators are masked, not clamped") {
  RasterGrid stack = stack_from_tuples(kBsiBands, {{0.0, 0.0, 0.0, 0.0}});
  IndexProduct p = bsi(stack);
  CHECK(p.plane.mask()[0] == 0);
  CHECK(p.plane.valid_count() == 0);
}

TEST_CASE("indices stay in [-1,1] and are scale invariant") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> d(0.01, 1.0);
  std::vector<std::vector<double>> tuples;
  for (int i = 0; i < 1000; ++i) {
    tuples.push_back({d(rng), d(rng), d(rng), d(rng)});
  }
  RasterGrid stack = stack_from_tuples(kBsiBands, tuples);
  IndexProduct base_bsi = bsi(stack);
  IndexProduct base_ndvi = ndvi(stack);
  for (std::size_t i = 0; i < tuples.size(); ++i) {
    CHECK(base_bsi.plane.plane(0)[i] >= -1.0);
    CHECK(base_bsi.plane.plane(0)[i] <= 1.0);
    CHECK(base_ndvi.plane.plane(0)[i] >= -1.0);
    CHECK(base_ndvi.plane.plane(0)[i] <= 1.0);
  }

  for (double c : {0.1, 10.0}) {
    std::vector<std::vector<double>> scaled = tuples;
    for (auto& t : scaled) {
      for (auto& v : t) v *= c;
    }
    IndexProduct p = bsi(stack_from_tuples(kBsiBands, scaled));
    for (std::size_t i = 0; i < tuples.size(); ++i) {
      CHECK(std::abs(p.plane.plane(0)[i] - base_bsi.plane.plane(0)[i]) <= 1e-12);
    }
  }
}

TEST_CASE("output masks never exceed input masks") {
  RasterGrid stack = stack_from_tuples(
      kBsiBands, {{0.1, 0.2, 0.3, 0.4}, {0.2, 0.3, 0.4, 0.5}});
  stack.mask()[0] = 0;
  IndexProduct p = bsi(stack);
  CHECK(p.plane.mask()[0] == 0);
  CHECK(p.plane.mask()[1] == 1);
}

TEST_CASE("compose presets order the display slots") {
  RasterGrid stack = stack_from_tuples({"B2", "B3", "B4", "B8", "B12"},
                                       {{0.1, 0.2, 0.3, 0.4, 0.5}});
  CompositeTriple rgb = compose(stack, TriplePreset::rgb);
  CHECK(rgb.grid.band(0).name == "B4");
  CHECK(rgb.grid.band(1).name == "B3");
  CHECK(rgb.grid.band(2).name == "B2");
  CHECK(rgb.grid.plane(0)[0] == 0.3);
  CHECK(rgb.grid.plane(1)[0] == 0.2);
  CHECK(rgb.grid.plane(2)[0] == 0.1);

  CompositeTriple fswir = compose(stack, TriplePreset::fswir);
  CHECK(fswir.grid.band(0).name == "B12");
  CHECK(fswir.grid.band(1).name == "B8");
  CHECK(fswir.grid.band(2).name == "B4");

  CompositeTriple custom = compose(stack, {"B8", "B4", "B3"});
  CHECK(custom.grid.band(0).name == "B8");
  CHECK(custom.grid.plane(0)[0] == 0.4);
  CHECK(custom.grid.plane(1)[0] == 0.3);
  CHECK(custom.grid.plane(2)[0] == 0.2);
}

TEST_CASE("compose copies samples unmodified") {
  std::mt19937_64 rng(37);
  std::uniform_real_distribution<double> d(0.0, 1.0);
  std::vector<std::vector<double>> tuples;
  for (int i = 0; i < 64; ++i) tuples.push_back({d(rng), d(rng), d(rng), d(rng)});
  RasterGrid stack = stack_from_tuples(kBsiBands, tuples);
  CompositeTriple t = compose(stack, {"B12", "B8", "B2"});
  for (std::size_t i = 0; i < tuples.size(); ++i) {
    CHECK(t.grid.plane(0)[i] == stack.plane(3)[i]);
    CHECK(t.grid.plane(1)[i] == stack.plane(2)[i]);
    CHECK(t.grid.plane(2)[i] == stack.plane(0)[i]);
  }
}
