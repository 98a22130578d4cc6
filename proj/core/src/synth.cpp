#include "soilmark/synth.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "soilmark/datetime.hpp"
#include "soilmark/geotiff.hpp"

namespace soilmark {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Deterministic Gaussian draws: mt19937_64 is bit-stable across platforms and
// Box-Muller avoids the implementation-defined std::normal_distribution.
class GaussianStream {
public:
  explicit GaussianStream(std::uint64_t seed) : rng_(seed) {}

  double next(double sd) {
    if (sd <= 0.0) return 0.0;
    double u1 = uniform_open();
    double u2 = uniform_open();
    return sd * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

private:
  double uniform_open() {
    // in (0,1]: never feeds log() a zero
    return (static_cast<double>(rng_() >> 11) + 1.0) * 0x1.0p-53;
  }
  std::mt19937_64 rng_;
};

double point_segment_distance(double px, double py, double ax, double ay,
                              double bx, double by) {
  double dx = bx - ax, dy = by - ay;
  double len2 = dx * dx + dy * dy;
  double t = len2 > 0.0 ? ((px - ax) * dx + (py - ay) * dy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  double cx = ax + t * dx, cy = ay + t * dy;
  return std::hypot(px - cx, py - cy);
}

bool inside_feature(const FeatureSpec& f, double x, double y) {
  if (const auto* line = std::get_if<PolylineFeature>(&f.shape)) {
    double half = line->width_m / 2.0;
    for (std::size_t i = 0; i + 1 < line->points.size(); ++i) {
      if (point_segment_distance(x, y, line->points[i].first,
                                 line->points[i].second,
                                 line->points[i + 1].first,
                                 line->points[i + 1].second) <= half) {
        return true;
      }
    }
    return false;
  }
  if (const auto* ring = std::get_if<MoatRingFeature>(&f.shape)) {
    double d = std::hypot(x - ring->center_x, y - ring->center_y);
    return d >= ring->inner_radius_m && d <= ring->outer_radius_m;
  }
  const auto& rect = std::get<RectFeature>(f.shape);
  return x >= rect.min_x && x <= rect.max_x && y >= rect.min_y && y <= rect.max_y;
}

void validate_spec(const SceneSetSpec& spec) {
  if (spec.n_scenes < 1) throw InvalidArgument("n_scenes must be at least 1");
  if (spec.noise_sd < 0.0) throw InvalidArgument("noise_sd must be non-negative");
  if (spec.width < 2 || spec.height < 2 || spec.width % 2 || spec.height % 2) {
    throw InvalidArgument("scene dimensions must be even and at least 2");
  }
  if (spec.windows.empty()) throw InvalidArgument("at least one window required");
  for (const auto& f : spec.features) {
    for (const auto& [band, offset] : f.contrast) {
      if (!std::isfinite(offset)) {
        throw InvalidArgument("contrast for band " + band + " must be finite");
      }
    }
    if (const auto* line = std::get_if<PolylineFeature>(&f.shape)) {
      if (line->width_m <= 0.0) throw InvalidArgument("polyline width must be positive");
      if (line->points.size() < 2) throw InvalidArgument("polyline needs two points");
    }
    if (const auto* ring = std::get_if<MoatRingFeature>(&f.shape)) {
      if (ring->outer_radius_m <= 0.0 || ring->inner_radius_m < 0.0 ||
          ring->inner_radius_m >= ring->outer_radius_m) {
        throw InvalidArgument("moat ring radii must satisfy 0 <= inner < outer");
      }
    }
  }
}

}  // namespace

std::map<std::string, double> palaeochannel_contrast(double peak_contrast) {
  double c = peak_contrast;
  return {{"B2", 0.2 * c},  {"B3", 0.3 * c},  {"B4", 0.4 * c},
          {"B8", 1.0 * c},  {"B11", -1.0 * c}, {"B12", -1.0 * c}};
}

FeatureSpec default_palaeochannel(const SceneSetSpec& spec, double peak_contrast) {
  RegionOfInterest ext;
  ext.min_x = spec.geo.origin_x;
  ext.max_x = spec.geo.origin_x + spec.width * spec.geo.pixel_width;
  ext.max_y = spec.geo.origin_y;
  ext.min_y = spec.geo.origin_y - spec.height * spec.geo.pixel_height;

  double w = ext.max_x - ext.min_x;
  double h = ext.max_y - ext.min_y;
  FeatureSpec f;
  // meandering course from the west edge to the east edge
  f.shape = PolylineFeature{
      {{ext.min_x, ext.min_y + 0.70 * h},
       {ext.min_x + 0.35 * w, ext.min_y + 0.45 * h},
       {ext.min_x + 0.60 * w, ext.min_y + 0.55 * h},
       {ext.max_x, ext.min_y + 0.30 * h}},
      6.0 * spec.geo.pixel_width};
  f.contrast = palaeochannel_contrast(peak_contrast);
  return f;
}

SceneSetResult generate_scene_set(const SceneSetSpec& spec,
                                  const std::filesystem::path& out_dir) {
  validate_spec(spec);
  std::filesystem::create_directories(out_dir);

  std::uint64_t master = splitmix64(spec.seed);
  for (const auto& f : spec.features) master ^= splitmix64(f.seed + 0x9e3779b9ULL);

  const int n_years = spec.years.last - spec.years.first + 1;
  const int n_windows = static_cast<int>(spec.windows.size());

  // Feature membership per resolution, shared by all scenes.
  auto rasterize = [&](int w, int h, double pixel_size) {
    std::vector<std::vector<std::uint8_t>> per_feature;
    for (const auto& f : spec.features) {
      std::vector<std::uint8_t> m(std::size_t(w) * h, 0);
      for (int r = 0; r < h; ++r) {
        double y = spec.geo.origin_y - (r + 0.5) * pixel_size;
        for (int c = 0; c < w; ++c) {
          double x = spec.geo.origin_x + (c + 0.5) * pixel_size;
          m[std::size_t(r) * w + c] = inside_feature(f, x, y) ? 1 : 0;
        }
      }
      per_feature.push_back(std::move(m));
    }
    return per_feature;
  };

  const double res10 = spec.geo.pixel_width;
  const double res20 = res10 * 2.0;
  auto features10 = rasterize(spec.width, spec.height, res10);
  auto features20 = rasterize(spec.width / 2, spec.height / 2, res20);

  RegionOfInterest footprint;
  footprint.min_x = spec.geo.origin_x;
  footprint.max_x = spec.geo.origin_x + spec.width * res10;
  footprint.max_y = spec.geo.origin_y;
  footprint.min_y = spec.geo.origin_y - spec.height * res10;
  footprint.epsg = spec.geo.epsg;

  SceneSetResult result;

  for (int i = 0; i < spec.n_scenes; ++i) {
    int year = spec.years.first + (i / n_windows) % n_years;
    const SeasonWindow& win = spec.windows[i % n_windows];
    // mid-window date, morning overpass
    int mid_month = (win.start_month + win.end_month) / 2;
    CivilDateTime when{year, mid_month, 15, 10, 30, 0};

    char id[64];
    std::snprintf(id, sizeof id, "SYNTH_%03d_%04d%02d%02d", i + 1, when.year,
                  when.month, when.day);

    SceneRecord rec;
    rec.scene_id = id;
    rec.acquired_at = unix_from_civil(when);
    rec.cloud_cover_pct = 5.0 + (i * 3) % 10;
    rec.footprint = footprint;

    std::filesystem::path scene_dir = out_dir / rec.scene_id;
    std::filesystem::create_directories(scene_dir);

    GaussianStream noise(splitmix64(master ^ (std::uint64_t(i) + 1)));

    for (const auto& band : spec.bands) {
      const BandDescriptor& desc = sentinel2_band(band);
      bool is20 = desc.native_resolution_m >= 20.0;
      int w = is20 ? spec.width / 2 : spec.width;
      int h = is20 ? spec.height / 2 : spec.height;
      const auto& features = is20 ? features20 : features10;

      GeoTransform geo = spec.geo;
      geo.pixel_width = is20 ? res20 : res10;
      geo.pixel_height = is20 ? res20 : res10;

      double base = 0.0;
      if (auto it = spec.base_reflectance.find(band); it != spec.base_reflectance.end()) {
        base = it->second;
      }

      RasterGrid grid(w, h, {desc}, geo);
      auto plane = grid.plane(0);
      for (std::size_t p = 0; p < plane.size(); ++p) {
        double v = base;
        for (std::size_t fi = 0; fi < spec.features.size(); ++fi) {
          if (!features[fi][p]) continue;
          if (auto it = spec.features[fi].contrast.find(band);
              it != spec.features[fi].contrast.end()) {
            v += it->second;
          }
        }
        v += noise.next(spec.noise_sd);
        // floor at one DN so valid samples never collide with the nodata 0
        plane[p] = std::max(1e-4, v);
      }

      // Scenes are stored as Level-1C style DN = reflectance * 10000.
      std::filesystem::path file = scene_dir / (band + ".tif");
      GeoTiffWriteOptions wo;
      wo.sample_format = TiffSampleFormat::uint16;
      wo.uint16_scale = 10000.0;
      write_geotiff(grid, file, wo);
      rec.band_files[band] = file.string();
    }

    write_sidecar(rec, out_dir / (rec.scene_id + ".scene.json"));
    result.catalog.records.push_back(std::move(rec));
  }
  sort_canonical(result.catalog.records);

  // Ground truth at 10 m.
  result.ground_truth = make_byte_image(spec.width, spec.height, 1);
  for (std::size_t p = 0; p < result.ground_truth.pixels.size(); ++p) {
    for (const auto& m : features10) {
      if (m[p]) {
        result.ground_truth.pixels[p] = 255;
        break;
      }
    }
  }
  result.ground_truth_path = out_dir / "ground_truth.png";
  write_png(result.ground_truth, result.ground_truth_path);
  return result;
}

}  // namespace soilmark
