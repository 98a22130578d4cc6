#include "soilmark/compositor.hpp"

#include <algorithm>
#include <cmath>

#include "soilmark/datetime.hpp"
#include "soilmark/geotiff.hpp"
#include "strips.hpp"

namespace soilmark {

namespace {

// Loads one band of a scene, harmonized to the target resolution and cropped
// to roi. Band files are usually single-band; multi-band files are accepted
// when they carry the band by name.
RasterGrid load_band(const SceneRecord& scene, const std::string& band,
                     const RegionOfInterest& roi, const CompositeOptions& opt) {
  auto it = scene.band_files.find(band);
  if (it == scene.band_files.end()) {
    throw MissingBand("scene " + scene.scene_id + " does not provide band " + band);
  }
  GeoTiffReadResult file = read_geotiff(it->second);
  RasterGrid grid = std::move(file.grid);

  int plane = grid.band_index(band);
  if (plane < 0 && grid.band_count() == 1) plane = 0;
  if (plane < 0) {
    throw MissingBand("file " + it->second + " does not contain band " + band);
  }
  if (grid.band_count() > 1) {
    RasterGrid single(grid.width(), grid.height(), {grid.band(plane)}, grid.geo());
    std::copy(grid.plane(plane).begin(), grid.plane(plane).end(),
              single.plane(0).begin());
    std::copy(grid.mask().begin(), grid.mask().end(), single.mask().begin());
    grid = std::move(single);
  } else {
    // make sure the descriptor carries the catalog band name
    RasterGrid named(grid.width(), grid.height(),
                     {[&] {
                       for (const auto& b : sentinel2_bands()) {
                         if (b.name == band) return b;
                       }
                       return derived_band(band);
                     }()},
                     grid.geo());
    std::copy(grid.plane(0).begin(), grid.plane(0).end(), named.plane(0).begin());
    std::copy(grid.mask().begin(), grid.mask().end(), named.mask().begin());
    grid = std::move(named);
  }

  grid = scale_reflectance(grid, opt.reflectance_scale);
  if (grid.geo().pixel_width != opt.target_resolution_m ||
      grid.geo().pixel_height != opt.target_resolution_m) {
    grid = resample_to(grid, opt.target_resolution_m, opt.resample);
  }
  return crop(grid, roi);
}

}  // namespace

CompositeStack mean_composite(const std::vector<SceneRecord>& scenes,
                              const std::vector<std::string>& bands,
                              const RegionOfInterest& roi,
                              const CompositeOptions& options) {
  if (scenes.empty()) throw EmptyInput("mean_composite requires at least one scene");
  if (bands.empty()) throw EmptyInput("mean_composite requires at least one band");

  std::vector<SceneRecord> ordered = scenes;
  sort_canonical(ordered);

  std::vector<double> sums;
  std::vector<std::uint32_t> counts;
  RasterGrid reference;
  bool first = true;

  for (const auto& scene : ordered) {
    // Assemble the per-scene stack on the common grid.
    std::vector<RasterGrid> planes;
    planes.reserve(bands.size());
    for (const auto& band : bands) {
      planes.push_back(load_band(scene, band, roi, options));
    }
    const RasterGrid& head = planes.front();
    for (const auto& g : planes) {
      if (g.width() != head.width() || g.height() != head.height() ||
          !(g.geo() == head.geo())) {
        throw CrsMismatch("scene " + scene.scene_id +
                          " bands disagree on grid after harmonization");
      }
    }
    if (first) {
      std::vector<BandDescriptor> descriptors;
      for (const auto& g : planes) descriptors.push_back(g.band(0));
      reference = RasterGrid(head.width(), head.height(), descriptors, head.geo());
      sums.assign(reference.pixel_count() * bands.size(), 0.0);
      counts.assign(reference.pixel_count(), 0);
      first = false;
    } else if (head.width() != reference.width() ||
               head.height() != reference.height() ||
               !(head.geo() == reference.geo())) {
      throw CrsMismatch("scene " + scene.scene_id +
                        " grid does not align with the composite grid");
    }

    // Shared-mask semantics: a pixel masked in any band is skipped entirely.
    const std::size_t npix = reference.pixel_count();
    std::vector<std::uint8_t> scene_valid(npix, 1);
    for (const auto& g : planes) {
      auto m = g.mask();
      for (std::size_t i = 0; i < npix; ++i) scene_valid[i] &= m[i];
    }

    detail::parallel_strips(reference.height(), [&](int r0, int r1, int) {
      std::size_t begin = std::size_t(r0) * reference.width();
      std::size_t end = std::size_t(r1) * reference.width();
      for (std::size_t i = begin; i < end; ++i) {
        if (!scene_valid[i]) continue;
        counts[i] += 1;
        for (std::size_t b = 0; b < planes.size(); ++b) {
          sums[b * npix + i] += planes[b].plane(0)[i];
        }
      }
    });
  }

  CompositeStack out;
  out.grid = std::move(reference);
  const std::size_t npix = out.grid.pixel_count();
  auto mask = out.grid.mask();
  for (std::size_t i = 0; i < npix; ++i) {
    mask[i] = counts[i] > 0 ? 1 : 0;
    for (int b = 0; b < out.grid.band_count(); ++b) {
      out.grid.plane(b)[i] =
          counts[i] > 0 ? sums[std::size_t(b) * npix + i] / counts[i] : 0.0;
    }
  }
  out.counts = std::move(counts);
  for (const auto& s : ordered) out.scene_ids.push_back(s.scene_id);
  return out;
}

std::vector<BucketComposite> window_composites(const Catalog& catalog,
                                               const FilterSpec& spec,
                                               const std::vector<std::string>& bands,
                                               const CompositeOptions& options,
                                               bool per_year_buckets) {
  std::vector<BucketComposite> out;
  Catalog filtered = filter_catalog(catalog, spec);

  auto composite_bucket = [&](BucketKey key, const std::vector<SceneRecord>& scenes) {
    BucketComposite bc;
    bc.key = key;
    if (scenes.empty()) {
      bc.message = "EmptyBucket: no scenes in window " +
                   std::to_string(key.window + 1) +
                   (key.year ? " year " + std::to_string(*key.year) : " (pooled)");
      return bc;
    }
    bc.stack = mean_composite(scenes, bands, spec.roi, options);
    bc.stack->filter = spec;
    return bc;
  };

  for (std::size_t w = 0; w < spec.windows.size(); ++w) {
    std::vector<SceneRecord> pooled;
    for (const auto& rec : filtered.records) {
      if (window_index(spec, rec.acquired_at) == static_cast<int>(w)) {
        pooled.push_back(rec);
      }
    }
    out.push_back(composite_bucket({static_cast<int>(w), std::nullopt}, pooled));

    if (!per_year_buckets) continue;
    for (int year = spec.years.first; year <= spec.years.last; ++year) {
      std::vector<SceneRecord> bucket;
      for (const auto& rec : pooled) {
        if (civil_from_unix(rec.acquired_at).year == year) bucket.push_back(rec);
      }
      out.push_back(composite_bucket({static_cast<int>(w), year}, bucket));
    }
  }
  return out;
}

}  // namespace soilmark
