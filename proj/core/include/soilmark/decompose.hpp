#pragma once

#include <array>
#include <string>
#include <vector>

#include "soilmark/compositor.hpp"
#include "soilmark/indices.hpp"
#include "soilmark/raster.hpp"

namespace soilmark {

// Hexcone conversion of a display-referred triple (all samples in [0,1]) into
// an H,S,V grid with H in [0,1), S and V in [0,1]. Achromatic pixels get
// H = S = 0. Throws OutOfRange when a valid sample leaves [0,1].
RasterGrid rgb_to_hsv(const CompositeTriple& triple);
RasterGrid hsv_to_rgb(const RasterGrid& hsv);

// Tasselled Cap weights for the Sentinel-2 six-band stack
// (Blue, Green, Red, NIR, SWIR1, SWIR2 = B2,B3,B4,B8,B11,B12).
struct TctCoefficients {
  std::array<std::array<double, 6>, 3> weights{};  // rows: brightness, greenness, wetness
  std::array<double, 3> bias{0.0, 0.0, 0.0};

  static TctCoefficients sentinel2();
};

// Per pixel, (TCTb, TCTg, TCTw) = weights * bands + bias in double precision.
RasterGrid tct(const RasterGrid& stack,
               const TctCoefficients& coeffs = TctCoefficients::sentinel2());
inline RasterGrid tct(const CompositeStack& stack,
                      const TctCoefficients& coeffs = TctCoefficients::sentinel2()) {
  return tct(stack.grid, coeffs);
}

enum class PcaMode { correlation, covariance };

struct PcaResult {
  std::vector<double> eigenvalues;                 // descending
  std::vector<std::vector<double>> eigenvectors;   // [component][band loading]
  std::vector<double> explained_variance_ratio;    // eigenvalue / trace
  RasterGrid scores;                               // PC1..PCk bands
  PcaMode mode = PcaMode::correlation;
  std::vector<std::string> band_order;
  std::vector<double> band_means;
  std::vector<double> band_sds;  // populated in correlation mode
};

// The four 10 m bands, the default PCA input.
std::vector<std::string> default_pca_bands();

// Band statistics over valid pixels (double precision, compensated sums,
// strip-parallel with a fixed merge order), correlation or covariance matrix,
// cyclic Jacobi eigen-decomposition (off-diagonal norm <= 1e-12, at most 100
// sweeps), eigenpairs sorted by descending eigenvalue with each component's
// largest-magnitude loading made positive.
PcaResult pca(const RasterGrid& stack, const std::vector<std::string>& bands,
              PcaMode mode);
inline PcaResult pca(const CompositeStack& stack,
                     const std::vector<std::string>& bands, PcaMode mode) {
  return pca(stack.grid, bands, mode);
}

// Sum of the first n explained-variance ratios.
double explained_variance(const PcaResult& result, int n_components);

// {eigenvalues, eigenvectors, ratios, mode, band order} as a JSON document.
std::string pca_report_json(const PcaResult& result);

// Cyclic Jacobi eigen-decomposition of a dense symmetric matrix (row-major,
// n x n). Returns eigenvalues (unsorted) and fills eigenvectors column j with
// the vector for eigenvalue j.
void jacobi_eigen(std::vector<double>& matrix, int n,
                  std::vector<double>& eigenvalues,
                  std::vector<double>& eigenvectors, double tolerance = 1e-12,
                  int max_sweeps = 100);

}  // namespace soilmark
