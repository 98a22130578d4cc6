#include "soilmark/indices.hpp"

#include <cmath>

namespace soilmark {

namespace {

// (a - b) / (a + b) with per-pixel masking of zero denominators.
IndexProduct normalized_difference(const RasterGrid& stack, std::string name,
                                   std::string formula,
                                   const std::vector<int>& plus,
                                   const std::vector<int>& minus) {
  RasterGrid plane(stack.width(), stack.height(), {derived_band(name)}, stack.geo());
  auto out = plane.plane(0);
  auto out_mask = plane.mask();
  auto in_mask = stack.mask();

  for (std::size_t i = 0; i < stack.pixel_count(); ++i) {
    if (!in_mask[i]) {
      out_mask[i] = 0;
      continue;
    }
    double a = 0.0, b = 0.0;
    for (int p : plus) a += stack.plane(p)[i];
    for (int m : minus) b += stack.plane(m)[i];
    double denom = a + b;
    if (denom == 0.0) {
      out_mask[i] = 0;
    } else {
      out_mask[i] = 1;
      out[i] = (a - b) / denom;
    }
  }
  return {std::move(plane), std::move(name), std::move(formula)};
}

}  // namespace

IndexProduct bsi(const RasterGrid& stack) {
  int blue = stack.require_band("B2");
  int red = stack.require_band("B4");
  int nir = stack.require_band("B8");
  int swir2 = stack.require_band("B12");
  return normalized_difference(stack, "BSI",
                               "((B4+B12)-(B8+B2))/((B4+B12)+(B8+B2))",
                               {red, swir2}, {nir, blue});
}

IndexProduct ndvi(const RasterGrid& stack) {
  int red = stack.require_band("B4");
  int nir = stack.require_band("B8");
  return normalized_difference(stack, "NDVI", "(B8-B4)/(B8+B4)", {nir}, {red});
}

CompositeTriple compose(const RasterGrid& stack,
                        const std::array<std::string, 3>& display_bands) {
  std::array<int, 3> idx{};
  for (int i = 0; i < 3; ++i) idx[i] = stack.require_band(display_bands[i]);

  std::vector<BandDescriptor> descriptors;
  for (int i = 0; i < 3; ++i) descriptors.push_back(stack.band(idx[i]));
  RasterGrid grid(stack.width(), stack.height(), descriptors, stack.geo());
  for (int i = 0; i < 3; ++i) {
    auto src = stack.plane(idx[i]);
    std::copy(src.begin(), src.end(), grid.plane(i).begin());
  }
  std::copy(stack.mask().begin(), stack.mask().end(), grid.mask().begin());
  return {std::move(grid), TriplePreset::custom};
}

CompositeTriple compose(const RasterGrid& stack, TriplePreset preset) {
  if (preset == TriplePreset::rgb) {
    CompositeTriple t = compose(stack, {"B4", "B3", "B2"});
    t.preset = TriplePreset::rgb;
    return t;
  }
  if (preset == TriplePreset::fswir) {
    CompositeTriple t = compose(stack, {"B12", "B8", "B4"});
    t.preset = TriplePreset::fswir;
    return t;
  }
  throw InvalidArgument("custom preset requires explicit display bands");
}

}  // namespace soilmark
