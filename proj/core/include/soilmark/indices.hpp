#pragma once

#include <array>
#include <string>

#include "soilmark/compositor.hpp"
#include "soilmark/raster.hpp"

namespace soilmark {

struct IndexProduct {
  RasterGrid plane;       // single band
  std::string index_name;
  std::string formula_id;  // exact band arithmetic, for provenance
};

enum class TriplePreset { rgb, fswir, custom };

// Three bands copied (never stretched) into display order R,G,B.
struct CompositeTriple {
  RasterGrid grid;
  TriplePreset preset = TriplePreset::custom;
};

// Bare Soil Index with the SWIR2 (B12) substitution:
// ((Red + SWIR2) - (NIR + Blue)) / ((Red + SWIR2) + (NIR + Blue)).
// Zero-denominator pixels come out masked.
IndexProduct bsi(const RasterGrid& stack);
inline IndexProduct bsi(const CompositeStack& stack) { return bsi(stack.grid); }

// (NIR - Red) / (NIR + Red)
IndexProduct ndvi(const RasterGrid& stack);
inline IndexProduct ndvi(const CompositeStack& stack) { return ndvi(stack.grid); }

// rgb preset: (B4,B3,B2); fswir preset: (B12,B8,B4).
CompositeTriple compose(const RasterGrid& stack, TriplePreset preset);
CompositeTriple compose(const RasterGrid& stack,
                        const std::array<std::string, 3>& display_bands);
inline CompositeTriple compose(const CompositeStack& stack, TriplePreset preset) {
  return compose(stack.grid, preset);
}
inline CompositeTriple compose(const CompositeStack& stack,
                               const std::array<std::string, 3>& display_bands) {
  return compose(stack.grid, display_bands);
}

}  // namespace soilmark
