#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "soilmark/raster.hpp"

namespace soilmark {

enum class TiffByteOrder { little, big };
enum class TiffLayout { strips, tiles };
enum class TiffCompression { none, deflate };
enum class TiffSampleFormat { uint16, float32 };
enum class TiffPlanarConfig { chunky, planar };

struct GeoTiffHeader {
  TiffByteOrder byte_order = TiffByteOrder::little;
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::uint16_t samples_per_pixel = 1;
  TiffSampleFormat sample_format = TiffSampleFormat::float32;
  std::uint16_t bits_per_sample = 32;
  TiffLayout layout = TiffLayout::strips;
  TiffCompression compression = TiffCompression::deflate;
  TiffPlanarConfig planar = TiffPlanarConfig::planar;
  bool has_geo = false;
  std::optional<double> nodata;
  std::vector<std::string> band_names;
};

struct GeoTiffReadResult {
  RasterGrid grid;
  GeoTiffHeader header;
};

// Decodes the supported baseline-TIFF subset: little or big endian, strips or
// tiles, compression none/deflate, uint16/float32 samples, chunky or planar
// band layout. Samples equal to the GDAL nodata tag arrive masked invalid.
// Throws UnsupportedFeature for out-of-subset files, MalformedFile for
// structural inconsistencies, IoError when the file cannot be read.
GeoTiffReadResult read_geotiff(const std::filesystem::path& path);

struct GeoTiffWriteOptions {
  TiffSampleFormat sample_format = TiffSampleFormat::float32;
  TiffByteOrder byte_order = TiffByteOrder::little;
  TiffLayout layout = TiffLayout::strips;
  TiffCompression compression = TiffCompression::deflate;
  TiffPlanarConfig planar = TiffPlanarConfig::planar;
  // uint16 export converts reflectance to DN with this factor, then clamps
  // to [0, 65535].
  double uint16_scale = 10000.0;
  double nodata_float = -9999.0;
  std::uint16_t nodata_uint16 = 0;
  std::uint32_t rows_per_strip = 64;
  std::uint32_t tile_size = 64;  // must be a multiple of 16
};

// Writes the grid with pixel-scale, tiepoint and EPSG geokeys; invalid pixels
// become the declared nodata value. Band names travel in ImageDescription so
// stages chained through files keep band identity.
void write_geotiff(const RasterGrid& grid, const std::filesystem::path& path,
                   const GeoTiffWriteOptions& options = {});
void write_geotiff(const RasterGrid& grid, const std::filesystem::path& path,
                   TiffSampleFormat sample_format);

}  // namespace soilmark
