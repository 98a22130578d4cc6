#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "soilmark/errors.hpp"

namespace soilmark {

// Affine mapping between pixel indices and map coordinates. pixel_height is
// positive and applied downward: row 0 is the northernmost row.
struct GeoTransform {
  double origin_x = 0.0;
  double origin_y = 0.0;
  double pixel_width = 1.0;
  double pixel_height = 1.0;
  int epsg = 0;

  std::pair<double, double> pixel_center(int col, int row) const {
    return {origin_x + (col + 0.5) * pixel_width,
            origin_y - (row + 0.5) * pixel_height};
  }

  friend bool operator==(const GeoTransform&, const GeoTransform&) = default;
};

enum class BandRole {
  Aerosols,
  Blue,
  Green,
  Red,
  RedEdge1,
  RedEdge2,
  RedEdge3,
  RedEdge4,
  NIR,
  WaterVapor,
  Cirrus,
  Swir1,
  Swir2,
  Derived,  // computed products (indices, decompositions, scores)
};

struct BandDescriptor {
  std::string name;
  BandRole role = BandRole::Derived;
  double wavelength_nm = 0.0;
  double native_resolution_m = 0.0;

  friend bool operator==(const BandDescriptor&, const BandDescriptor&) = default;
};

// Sentinel-2 MSI band table (B1..B12, B8A) with S2A wavelengths.
const std::vector<BandDescriptor>& sentinel2_bands();
// Throws MissingBand for names outside B1..B12, B8A.
const BandDescriptor& sentinel2_band(std::string_view name);
// Descriptor for a computed single-plane product.
BandDescriptor derived_band(std::string name);

struct RegionOfInterest {
  double min_x = 0.0;
  double min_y = 0.0;
  double max_x = 0.0;
  double max_y = 0.0;
  int epsg = 0;

  bool valid() const { return min_x < max_x && min_y < max_y; }
  bool intersects(const RegionOfInterest& other) const {
    if (epsg != other.epsg) return false;
    return min_x <= other.max_x && other.min_x <= max_x &&
           min_y <= other.max_y && other.min_y <= max_y;
  }

  friend bool operator==(const RegionOfInterest&, const RegionOfInterest&) = default;
};

// Multi-band plane of double samples with one shared validity mask. Treated as
// immutable once built; every operation returns a new grid.
class RasterGrid {
public:
  RasterGrid() = default;
  RasterGrid(int width, int height, std::vector<BandDescriptor> bands,
             GeoTransform geo);

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t pixel_count() const {
    return static_cast<std::size_t>(width_) * height_;
  }
  int band_count() const { return static_cast<int>(bands_.size()); }
  bool empty() const { return width_ == 0 || height_ == 0 || bands_.empty(); }

  const std::vector<BandDescriptor>& bands() const { return bands_; }
  const BandDescriptor& band(int i) const { return bands_.at(i); }
  // Index of band by name, -1 when absent.
  int band_index(std::string_view name) const;
  // Same, but throws MissingBand with a helpful message.
  int require_band(std::string_view name) const;

  std::span<const double> plane(int b) const { return planes_.at(b); }
  std::span<double> plane(int b) { return planes_.at(b); }
  std::span<const std::uint8_t> mask() const { return mask_; }
  std::span<std::uint8_t> mask() { return mask_; }

  bool valid_at(int col, int row) const {
    return mask_[static_cast<std::size_t>(row) * width_ + col] != 0;
  }
  double at(int b, int col, int row) const {
    return planes_[b][static_cast<std::size_t>(row) * width_ + col];
  }
  double& at(int b, int col, int row) {
    return planes_[b][static_cast<std::size_t>(row) * width_ + col];
  }

  const GeoTransform& geo() const { return geo_; }
  RegionOfInterest extent() const;
  std::size_t valid_count() const;

private:
  int width_ = 0;
  int height_ = 0;
  std::vector<BandDescriptor> bands_;
  std::vector<std::vector<double>> planes_;
  std::vector<std::uint8_t> mask_;
  GeoTransform geo_;
};

enum class ResampleMethod { nearest, bilinear };

// Pixel window whose centers fall inside the closed roi rectangle.
// Throws CrsMismatch when EPSG codes differ, DisjointRoi when no pixel
// center is selected.
RasterGrid crop(const RasterGrid& grid, const RegionOfInterest& roi);

// Resamples every band to target_resolution_m, preserving the grid origin.
// Bilinear weights are renormalized over valid neighbors; a pixel with no
// valid contributing neighbor comes out invalid.
RasterGrid resample_to(const RasterGrid& grid, double target_resolution_m,
                       ResampleMethod method);

// Multiplies every valid sample by factor; mask unchanged.
RasterGrid scale_reflectance(const RasterGrid& grid, double factor);

// Bilinear kernel at continuous source coordinates (sx, sy), where integer
// coordinates sit on pixel centers. Returns false in *ok when no valid
// neighbor contributes.
double bilinear_sample(std::span<const double> plane,
                       std::span<const std::uint8_t> mask, int width, int height,
                       double sx, double sy, bool* ok);

// Every valid sample rounded to the nearest float32 value, matching what a
// float32 file round-trip would produce. Lets in-memory pipelines agree
// bit-for-bit with file-chained stage runs.
RasterGrid quantize_float32(const RasterGrid& grid);

}  // namespace soilmark
