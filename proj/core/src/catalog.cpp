#include "soilmark/catalog.hpp"

#include <algorithm>
#include <fstream>

#include <nlohmann/json.hpp>

#include "soilmark/datetime.hpp"

namespace soilmark {

using nlohmann::json;

std::vector<SeasonWindow> default_season_windows() {
  return {{1, 1, 3, 31}, {10, 1, 12, 31}};
}

namespace {

const json& require_field(const json& j, const char* field,
                          const std::filesystem::path& path) {
  auto it = j.find(field);
  if (it == j.end()) {
    throw MalformedSidecar(path.string() + ": missing field '" + field + "'");
  }
  return *it;
}

double require_number(const json& j, const char* field,
                      const std::filesystem::path& path) {
  const json& v = require_field(j, field, path);
  if (!v.is_number()) {
    throw MalformedSidecar(path.string() + ": field '" + field + "' must be numeric");
  }
  return v.get<double>();
}

}  // namespace

SceneRecord parse_sidecar(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open sidecar " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw MalformedSidecar(path.string() + ": invalid JSON (" + e.what() + ")");
  }
  if (!j.is_object()) throw MalformedSidecar(path.string() + ": not a JSON object");

  SceneRecord rec;
  const json& id = require_field(j, "scene_id", path);
  if (!id.is_string()) throw MalformedSidecar(path.string() + ": field 'scene_id' must be a string");
  rec.scene_id = id.get<std::string>();

  const json& ts = require_field(j, "acquired_at", path);
  if (!ts.is_string()) throw MalformedSidecar(path.string() + ": field 'acquired_at' must be a string");
  try {
    rec.acquired_at = parse_rfc3339(ts.get<std::string>());
  } catch (const InvalidArgument& e) {
    throw MalformedSidecar(path.string() + ": field 'acquired_at': " + e.what());
  }

  rec.cloud_cover_pct = require_number(j, "cloud_cover_pct", path);
  if (rec.cloud_cover_pct < 0.0 || rec.cloud_cover_pct > 100.0) {
    throw MalformedSidecar(path.string() + ": field 'cloud_cover_pct' outside [0,100]");
  }

  const json& fp = require_field(j, "footprint", path);
  if (!fp.is_object()) throw MalformedSidecar(path.string() + ": field 'footprint' must be an object");
  rec.footprint.min_x = require_number(fp, "min_x", path);
  rec.footprint.min_y = require_number(fp, "min_y", path);
  rec.footprint.max_x = require_number(fp, "max_x", path);
  rec.footprint.max_y = require_number(fp, "max_y", path);
  rec.footprint.epsg = static_cast<int>(require_number(fp, "epsg", path));
  if (!rec.footprint.valid()) {
    throw MalformedSidecar(path.string() + ": field 'footprint' min must be below max");
  }

  const json& bands = require_field(j, "bands", path);
  if (!bands.is_object()) throw MalformedSidecar(path.string() + ": field 'bands' must be an object");
  for (auto it = bands.begin(); it != bands.end(); ++it) {
    bool known = false;
    for (const auto& b : sentinel2_bands()) {
      if (b.name == it.key()) {
        known = true;
        break;
      }
    }
    if (!known) {
      throw MalformedSidecar(path.string() + ": unknown band key '" + it.key() + "'");
    }
    if (!it.value().is_string()) {
      throw MalformedSidecar(path.string() + ": band '" + it.key() + "' path must be a string");
    }
    std::filesystem::path p = it.value().get<std::string>();
    if (p.is_relative()) p = path.parent_path() / p;
    rec.band_files[it.key()] = p.string();
  }

  if (auto urls = j.find("asset_urls"); urls != j.end() && urls->is_object()) {
    for (auto it = urls->begin(); it != urls->end(); ++it) {
      if (it.value().is_string()) rec.band_urls[it.key()] = it.value().get<std::string>();
    }
  }
  return rec;
}

void write_sidecar(const SceneRecord& record, const std::filesystem::path& path) {
  json j;
  j["scene_id"] = record.scene_id;
  j["acquired_at"] = format_rfc3339(record.acquired_at);
  j["cloud_cover_pct"] = record.cloud_cover_pct;
  j["footprint"] = {{"min_x", record.footprint.min_x},
                    {"min_y", record.footprint.min_y},
                    {"max_x", record.footprint.max_x},
                    {"max_y", record.footprint.max_y},
                    {"epsg", record.footprint.epsg}};
  json bands = json::object();
  for (const auto& [name, file] : record.band_files) {
    // keep paths relative to the sidecar when possible
    std::filesystem::path p = file;
    auto rel = p.lexically_relative(path.parent_path());
    bands[name] = (!rel.empty() && rel.native().rfind("..", 0) != 0) ? rel.string()
                                                                     : p.string();
  }
  j["bands"] = bands;
  if (!record.band_urls.empty()) {
    json urls = json::object();
    for (const auto& [name, url] : record.band_urls) urls[name] = url;
    j["asset_urls"] = urls;
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write sidecar " + path.string());
  out << j.dump(2) << "\n";
}

void sort_canonical(std::vector<SceneRecord>& records) {
  std::stable_sort(records.begin(), records.end(),
                   [](const SceneRecord& a, const SceneRecord& b) {
                     if (a.acquired_at != b.acquired_at) {
                       return a.acquired_at < b.acquired_at;
                     }
                     return a.scene_id < b.scene_id;
                   });
}

Catalog ingest_directory(const std::filesystem::path& root) {
  if (!std::filesystem::exists(root)) {
    throw IoError("catalog root does not exist: " + root.string());
  }
  Catalog cat;
  std::vector<std::filesystem::path> sidecars;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(root)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    if (name.size() > 11 && name.ends_with(".scene.json")) {
      sidecars.push_back(entry.path());
    }
  }
  std::sort(sidecars.begin(), sidecars.end());
  for (const auto& p : sidecars) cat.records.push_back(parse_sidecar(p));
  sort_canonical(cat.records);
  return cat;
}

int window_index(const FilterSpec& spec, std::int64_t acquired_at) {
  CivilDateTime c = civil_from_unix(acquired_at);
  for (std::size_t i = 0; i < spec.windows.size(); ++i) {
    if (spec.windows[i].contains(c.month, c.day)) return static_cast<int>(i);
  }
  return -1;
}

bool matches_filter(const SceneRecord& record, const FilterSpec& spec) {
  if (record.cloud_cover_pct > spec.max_cloud_pct) return false;
  CivilDateTime c = civil_from_unix(record.acquired_at);
  if (c.year < spec.years.first || c.year > spec.years.last) return false;
  if (window_index(spec, record.acquired_at) < 0) return false;
  if (!record.footprint.intersects(spec.roi)) return false;
  return true;
}

Catalog filter_catalog(const Catalog& catalog, const FilterSpec& spec) {
  Catalog out;
  for (const auto& rec : catalog.records) {
    if (matches_filter(rec, spec)) out.records.push_back(rec);
  }
  return out;
}

}  // namespace soilmark
