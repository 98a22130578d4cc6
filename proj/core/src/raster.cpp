#include "soilmark/raster.hpp"

#include <algorithm>
#include <cmath>

namespace soilmark {

const std::vector<BandDescriptor>& sentinel2_bands() {
  static const std::vector<BandDescriptor> table = {
      {"B1", BandRole::Aerosols, 443.9, 60.0},
      {"B2", BandRole::Blue, 496.6, 10.0},
      {"B3", BandRole::Green, 560.0, 10.0},
      {"B4", BandRole::Red, 664.5, 10.0},
      {"B5", BandRole::RedEdge1, 703.9, 20.0},
      {"B6", BandRole::RedEdge2, 740.2, 20.0},
      {"B7", BandRole::RedEdge3, 782.5, 20.0},
      {"B8", BandRole::NIR, 835.1, 10.0},
      {"B8A", BandRole::RedEdge4, 864.8, 20.0},
      {"B9", BandRole::WaterVapor, 945.0, 60.0},
      {"B10", BandRole::Cirrus, 1373.5, 60.0},
      {"B11", BandRole::Swir1, 1613.7, 20.0},
      {"B12", BandRole::Swir2, 2202.4, 20.0},
  };
  return table;
}

const BandDescriptor& sentinel2_band(std::string_view name) {
  for (const auto& b : sentinel2_bands()) {
    if (b.name == name) return b;
  }
  throw MissingBand("unknown Sentinel-2 band name: " + std::string(name));
}

BandDescriptor derived_band(std::string name) {
  return BandDescriptor{std::move(name), BandRole::Derived, 0.0, 0.0};
}

RasterGrid::RasterGrid(int width, int height, std::vector<BandDescriptor> bands,
                       GeoTransform geo)
    : width_(width), height_(height), bands_(std::move(bands)), geo_(geo) {
  if (width <= 0 || height <= 0) {
    throw InvalidArgument("RasterGrid dimensions must be positive");
  }
  if (geo.pixel_width <= 0.0 || geo.pixel_height <= 0.0) {
    throw InvalidArgument("GeoTransform pixel size must be positive");
  }
  planes_.assign(bands_.size(), std::vector<double>(pixel_count(), 0.0));
  mask_.assign(pixel_count(), 1);
}

int RasterGrid::band_index(std::string_view name) const {
  for (std::size_t i = 0; i < bands_.size(); ++i) {
    if (bands_[i].name == name) return static_cast<int>(i);
  }
  return -1;
}

int RasterGrid::require_band(std::string_view name) const {
  int i = band_index(name);
  if (i < 0) throw MissingBand("band " + std::string(name) + " not present in grid");
  return i;
}

RegionOfInterest RasterGrid::extent() const {
  RegionOfInterest roi;
  roi.min_x = geo_.origin_x;
  roi.max_x = geo_.origin_x + width_ * geo_.pixel_width;
  roi.max_y = geo_.origin_y;
  roi.min_y = geo_.origin_y - height_ * geo_.pixel_height;
  roi.epsg = geo_.epsg;
  return roi;
}

std::size_t RasterGrid::valid_count() const {
  std::size_t n = 0;
  for (auto m : mask_) n += m != 0;
  return n;
}

RasterGrid crop(const RasterGrid& grid, const RegionOfInterest& roi) {
  if (!roi.valid()) throw InvalidArgument("roi min must be strictly below max");
  if (roi.epsg != grid.geo().epsg) {
    throw CrsMismatch("roi EPSG " + std::to_string(roi.epsg) +
                      " differs from grid EPSG " + std::to_string(grid.geo().epsg));
  }
  const GeoTransform& g = grid.geo();
  // Centers at origin + (i + 0.5) * step; closed bounds on both ends.
  int c0 = static_cast<int>(std::ceil((roi.min_x - g.origin_x) / g.pixel_width - 0.5));
  int c1 = static_cast<int>(std::floor((roi.max_x - g.origin_x) / g.pixel_width - 0.5));
  int r0 = static_cast<int>(std::ceil((g.origin_y - roi.max_y) / g.pixel_height - 0.5));
  int r1 = static_cast<int>(std::floor((g.origin_y - roi.min_y) / g.pixel_height - 0.5));
  c0 = std::max(c0, 0);
  r0 = std::max(r0, 0);
  c1 = std::min(c1, grid.width() - 1);
  r1 = std::min(r1, grid.height() - 1);
  if (c0 > c1 || r0 > r1) {
    throw DisjointRoi("roi selects no pixel centers of the grid");
  }

  GeoTransform out_geo = g;
  out_geo.origin_x = g.origin_x + c0 * g.pixel_width;
  out_geo.origin_y = g.origin_y - r0 * g.pixel_height;

  RasterGrid out(c1 - c0 + 1, r1 - r0 + 1, grid.bands(), out_geo);
  for (int b = 0; b < grid.band_count(); ++b) {
    auto src = grid.plane(b);
    auto dst = out.plane(b);
    for (int r = r0; r <= r1; ++r) {
      std::copy_n(src.begin() + static_cast<std::size_t>(r) * grid.width() + c0,
                  out.width(),
                  dst.begin() + static_cast<std::size_t>(r - r0) * out.width());
    }
  }
  auto smask = grid.mask();
  auto dmask = out.mask();
  for (int r = r0; r <= r1; ++r) {
    std::copy_n(smask.begin() + static_cast<std::size_t>(r) * grid.width() + c0,
                out.width(),
                dmask.begin() + static_cast<std::size_t>(r - r0) * out.width());
  }
  return out;
}

double bilinear_sample(std::span<const double> plane,
                       std::span<const std::uint8_t> mask, int width, int height,
                       double sx, double sy, bool* ok) {
  int c0 = static_cast<int>(std::floor(sx));
  int r0 = static_cast<int>(std::floor(sy));
  double fx = sx - c0;
  double fy = sy - r0;
  const int cols[2] = {c0, c0 + 1};
  const int rows[2] = {r0, r0 + 1};
  const double wx[2] = {1.0 - fx, fx};
  const double wy[2] = {1.0 - fy, fy};

  double wsum = 0.0;
  double acc = 0.0;
  for (int j = 0; j < 2; ++j) {
    if (rows[j] < 0 || rows[j] >= height) continue;
    for (int i = 0; i < 2; ++i) {
      if (cols[i] < 0 || cols[i] >= width) continue;
      double w = wx[i] * wy[j];
      if (w == 0.0) continue;
      std::size_t idx = static_cast<std::size_t>(rows[j]) * width + cols[i];
      if (!mask[idx]) continue;
      wsum += w;
      acc += w * plane[idx];
    }
  }
  if (wsum <= 0.0) {
    *ok = false;
    return 0.0;
  }
  *ok = true;
  return acc / wsum;
}

RasterGrid resample_to(const RasterGrid& grid, double target_resolution_m,
                       ResampleMethod method) {
  if (target_resolution_m <= 0.0) {
    throw InvalidArgument("target resolution must be positive");
  }
  const GeoTransform& g = grid.geo();
  int out_w = std::max<int>(
      1, static_cast<int>(std::llround(grid.width() * g.pixel_width / target_resolution_m)));
  int out_h = std::max<int>(
      1, static_cast<int>(std::llround(grid.height() * g.pixel_height / target_resolution_m)));

  GeoTransform out_geo = g;
  out_geo.pixel_width = target_resolution_m;
  out_geo.pixel_height = target_resolution_m;

  RasterGrid out(out_w, out_h, grid.bands(), out_geo);
  auto smask = grid.mask();
  auto dmask = out.mask();

  if (method == ResampleMethod::nearest) {
    for (int r = 0; r < out_h; ++r) {
      double cy = out_geo.origin_y - (r + 0.5) * target_resolution_m;
      int sr = static_cast<int>(std::floor((g.origin_y - cy) / g.pixel_height));
      sr = std::clamp(sr, 0, grid.height() - 1);
      for (int c = 0; c < out_w; ++c) {
        double cx = out_geo.origin_x + (c + 0.5) * target_resolution_m;
        int sc = static_cast<int>(std::floor((cx - g.origin_x) / g.pixel_width));
        sc = std::clamp(sc, 0, grid.width() - 1);
        std::size_t sidx = static_cast<std::size_t>(sr) * grid.width() + sc;
        std::size_t didx = static_cast<std::size_t>(r) * out_w + c;
        dmask[didx] = smask[sidx];
        for (int b = 0; b < grid.band_count(); ++b) {
          out.plane(b)[didx] = grid.plane(b)[sidx];
        }
      }
    }
    return out;
  }

  // bilinear
  for (int r = 0; r < out_h; ++r) {
    double cy = out_geo.origin_y - (r + 0.5) * target_resolution_m;
    double sy = (g.origin_y - cy) / g.pixel_height - 0.5;
    for (int c = 0; c < out_w; ++c) {
      double cx = out_geo.origin_x + (c + 0.5) * target_resolution_m;
      double sx = (cx - g.origin_x) / g.pixel_width - 0.5;
      std::size_t didx = static_cast<std::size_t>(r) * out_w + c;
      bool ok = false;
      for (int b = 0; b < grid.band_count(); ++b) {
        out.plane(b)[didx] = bilinear_sample(grid.plane(b), smask, grid.width(),
                                             grid.height(), sx, sy, &ok);
        if (!ok) break;
      }
      dmask[didx] = ok ? 1 : 0;
    }
  }
  return out;
}

RasterGrid quantize_float32(const RasterGrid& grid) {
  RasterGrid out = grid;
  auto mask = out.mask();
  for (int b = 0; b < out.band_count(); ++b) {
    auto p = out.plane(b);
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (mask[i]) p[i] = static_cast<double>(static_cast<float>(p[i]));
    }
  }
  return out;
}

RasterGrid scale_reflectance(const RasterGrid& grid, double factor) {
  if (factor <= 0.0) throw InvalidArgument("reflectance scale factor must be positive");
  RasterGrid out = grid;
  auto mask = out.mask();
  for (int b = 0; b < out.band_count(); ++b) {
    auto p = out.plane(b);
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (mask[i]) p[i] = p[i] * factor;
    }
  }
  return out;
}

}  // namespace soilmark
