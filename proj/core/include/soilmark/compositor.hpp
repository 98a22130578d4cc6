#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "soilmark/catalog.hpp"
#include "soilmark/raster.hpp"

namespace soilmark {

// Per-band temporal mean over a scene set. counts holds the number of valid
// observations per pixel; a composite pixel is valid exactly when its count
// is positive.
struct CompositeStack {
  RasterGrid grid;
  std::vector<std::uint32_t> counts;
  std::vector<std::string> scene_ids;
  FilterSpec filter;  // provenance: how the contributing set was selected
};

struct CompositeOptions {
  double reflectance_scale = 1e-4;  // Level-1C DN -> [0,1] reflectance
  double target_resolution_m = 10.0;
  ResampleMethod resample = ResampleMethod::bilinear;
};

// Loads every scene (reflectance-scaled, harmonized to the target resolution,
// cropped to roi) and accumulates the per-pixel arithmetic mean in double
// precision, scenes visited in (acquired_at, scene_id) order. A pixel masked
// in any band of a scene contributes nothing from that scene.
CompositeStack mean_composite(const std::vector<SceneRecord>& scenes,
                              const std::vector<std::string>& bands,
                              const RegionOfInterest& roi,
                              const CompositeOptions& options = {});

struct BucketKey {
  int window = 0;                // index into FilterSpec::windows
  std::optional<int> year;       // nullopt: pooled across the year range
  friend bool operator==(const BucketKey&, const BucketKey&) = default;
};

struct BucketComposite {
  BucketKey key;
  std::optional<CompositeStack> stack;  // empty on EmptyBucket
  std::string message;                  // diagnostic when stack is empty
};

// One composite per (window, year) plus the pooled per-window composite over
// all years. Empty buckets are reported in-place and do not abort the rest.
std::vector<BucketComposite> window_composites(const Catalog& catalog,
                                               const FilterSpec& spec,
                                               const std::vector<std::string>& bands,
                                               const CompositeOptions& options = {},
                                               bool per_year_buckets = true);

}  // namespace soilmark
