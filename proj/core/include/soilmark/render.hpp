#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "soilmark/indices.hpp"
#include "soilmark/png_io.hpp"
#include "soilmark/raster.hpp"

namespace soilmark {

struct StretchParams {
  double lower_pct = 2.0;
  double upper_pct = 98.0;
  double lower_value = 0.0;
  double upper_value = 0.0;
};

// Cumulative-count-cut bounds: linear-interpolation percentiles of the valid
// samples (position p/100 * (N-1) on the sorted array). Throws EmptyBand when
// nothing is valid.
StretchParams percentile_cut(const RasterGrid& grid, int band, double lower_pct,
                             double upper_pct);

// Histogram-approximated variant for large rasters; the cut error is bounded
// by one bin width of the valid range.
StretchParams percentile_cut_approx(const RasterGrid& grid, int band,
                                    double lower_pct, double upper_pct,
                                    int nbins = 1024);

// v -> round(255 * (clamp(v, lo, hi) - lo) / (hi - lo)), rounding half away
// from zero; lo == hi maps every valid pixel to 0; invalid pixels are 0.
std::vector<std::uint8_t> stretch_to_bytes(const RasterGrid& grid, int band,
                                           const StretchParams& params);

// clamp(v, lo, hi) linearly rescaled into [0,1] as doubles; used to feed the
// display-referred HSV rotation.
RasterGrid normalize_unit(const RasterGrid& grid,
                          const std::vector<StretchParams>& params);

struct Histogram {
  std::vector<double> bin_edges;        // nbins + 1, ascending
  std::vector<std::uint64_t> counts;    // nbins
  std::uint64_t valid_total = 0;
};

// Equal-width bins over range (defaults to the valid min..max); the last bin
// is closed on both ends. Invalid pixels are excluded.
Histogram histogram(const RasterGrid& grid, int band, int nbins,
                    std::optional<std::pair<double, double>> range = {});

ByteImage render(const CompositeTriple& triple,
                 const std::array<StretchParams, 3>& params);
ByteImage render_gray(const RasterGrid& grid, int band,
                      const StretchParams& params);

struct BandReportFiles {
  std::vector<std::filesystem::path> pngs;
  std::vector<std::filesystem::path> csvs;
};

// One Gray8 PNG (2/98 cut) and one histogram CSV (lo,hi,count) per band,
// named <prefix>_<band>.png / <prefix>_<band>_hist.csv.
BandReportFiles band_report(const RasterGrid& stack,
                            const std::filesystem::path& out_dir,
                            const std::string& prefix, int nbins = 100,
                            double lower_pct = 2.0, double upper_pct = 98.0);

// Stretch metadata for rendered products.
std::string stretch_metadata_json(const std::vector<StretchParams>& params,
                                  const std::vector<std::string>& band_names);

}  // namespace soilmark
