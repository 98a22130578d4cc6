#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "soilmark/raster.hpp"

namespace soilmark {

// One acquisition. band_files hold local paths, band_urls remote asset
// locations; a record fresh from a STAC search has only URLs.
struct SceneRecord {
  std::string scene_id;
  std::int64_t acquired_at = 0;  // Unix seconds, UTC
  double cloud_cover_pct = 0.0;
  std::map<std::string, std::string> band_files;
  std::map<std::string, std::string> band_urls;
  RegionOfInterest footprint;
};

// Recurring annual window, inclusive at both ends, interpreted in UTC.
struct SeasonWindow {
  int start_month = 1;
  int start_day = 1;
  int end_month = 12;
  int end_day = 31;

  bool contains(int month, int day) const {
    if (month < start_month || (month == start_month && day < start_day)) return false;
    if (month > end_month || (month == end_month && day > end_day)) return false;
    return true;
  }
  friend bool operator==(const SeasonWindow&, const SeasonWindow&) = default;
};

struct YearRange {
  int first = 2015;
  int last = 2020;
  friend bool operator==(const YearRange&, const YearRange&) = default;
};

struct FilterSpec {
  std::vector<SeasonWindow> windows;
  YearRange years;
  double max_cloud_pct = 20.0;
  RegionOfInterest roi;
};

// The seasonal windows and year span used throughout: Jan 1 - Mar 31 and
// Oct 1 - Dec 31 of 2015-2020.
std::vector<SeasonWindow> default_season_windows();

struct Catalog {
  std::vector<SceneRecord> records;

  std::size_t size() const { return records.size(); }
  bool empty() const { return records.empty(); }
};

// Scans root recursively for '*.scene.json' sidecars (schema: scene_id,
// acquired_at, cloud_cover_pct, footprint, bands). Band paths are resolved
// relative to each sidecar's directory. Records come back sorted by
// (acquired_at, scene_id).
Catalog ingest_directory(const std::filesystem::path& root);

SceneRecord parse_sidecar(const std::filesystem::path& path);
void write_sidecar(const SceneRecord& record, const std::filesystem::path& path);

// True when the record falls inside some (window x year), is at most
// max_cloud_pct cloudy, and its footprint intersects the roi.
bool matches_filter(const SceneRecord& record, const FilterSpec& spec);

// Keeps exactly the matching records, input order preserved.
Catalog filter_catalog(const Catalog& catalog, const FilterSpec& spec);

// Index into spec.windows for the record's month/day, or -1.
int window_index(const FilterSpec& spec, std::int64_t acquired_at);

void sort_canonical(std::vector<SceneRecord>& records);

}  // namespace soilmark
