#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "soilmark/catalog.hpp"
#include "soilmark/png_io.hpp"
#include "soilmark/raster.hpp"

namespace soilmark {

// Buried-feature footprints, in map units.
struct PolylineFeature {
  std::vector<std::pair<double, double>> points;
  double width_m = 30.0;
};

struct MoatRingFeature {
  double center_x = 0.0;
  double center_y = 0.0;
  double inner_radius_m = 0.0;
  double outer_radius_m = 0.0;
};

struct RectFeature {
  double min_x = 0.0;
  double min_y = 0.0;
  double max_x = 0.0;
  double max_y = 0.0;
};

struct FeatureSpec {
  std::variant<PolylineFeature, MoatRingFeature, RectFeature> shape;
  // Per-band reflectance offset applied inside the feature.
  std::map<std::string, double> contrast;
  // Mixed into the noise stream derivation; part of the reproducibility key.
  std::uint64_t seed = 0;
};

struct SceneSetSpec {
  int n_scenes = 12;
  int width = 256;   // 10 m pixels; must be even so the 20 m bands align
  int height = 256;
  GeoTransform geo{500000.0, 5000000.0, 10.0, 10.0, 32632};
  std::vector<std::string> bands = {"B2", "B3", "B4", "B8", "B11", "B12"};
  std::map<std::string, double> base_reflectance = {
      {"B2", 0.12}, {"B3", 0.14}, {"B4", 0.18},
      {"B8", 0.26}, {"B11", 0.32}, {"B12", 0.30}};
  std::vector<FeatureSpec> features;
  double noise_sd = 0.0;
  std::uint64_t seed = 0;
  // Acquisition dates cycle through these windows and years.
  std::vector<SeasonWindow> windows = default_season_windows();
  YearRange years{2015, 2020};
};

struct SceneSetResult {
  Catalog catalog;
  ByteImage ground_truth;                 // 255 inside any feature, 0 outside
  std::filesystem::path ground_truth_path;
};

// Damp palaeochannel signature: SWIR down, NIR up, visible slightly up.
// peak_contrast sets the largest absolute per-band offset.
std::map<std::string, double> palaeochannel_contrast(double peak_contrast);

// A diagonal palaeochannel crossing the scene, sized from the spec extent.
FeatureSpec default_palaeochannel(const SceneSetSpec& spec, double peak_contrast);

// Writes n_scenes GeoTIFF band sets plus sidecars under out_dir, along with
// ground_truth.png. Inside-feature pixels get base + contrast (+ noise),
// outside base (+ noise); reproducible bit-for-bit from the seeds.
SceneSetResult generate_scene_set(const SceneSetSpec& spec,
                                  const std::filesystem::path& out_dir);

}  // namespace soilmark
