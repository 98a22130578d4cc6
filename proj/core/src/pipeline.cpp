#include "soilmark/pipeline.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "soilmark/geotiff.hpp"
#include "soilmark/render.hpp"
#include "soilmark/stac.hpp"

namespace soilmark {

using nlohmann::json;

namespace {

const std::set<std::string> kKnownProducts = {"rgb", "fswir", "bsi", "ndvi",
                                              "hsv", "tct",   "pca"};

std::string format_monthday(int month, int day) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "%02d-%02d", month, day);
  return buf;
}

SeasonWindow parse_monthday_window(const std::string& start, const std::string& end) {
  SeasonWindow w;
  if (std::sscanf(start.c_str(), "%2d-%2d", &w.start_month, &w.start_day) != 2 ||
      std::sscanf(end.c_str(), "%2d-%2d", &w.end_month, &w.end_day) != 2) {
    throw ConfigError("windows: expected MM-DD strings, got '" + start + "'/'" +
                      end + "'");
  }
  return w;
}

json config_to_json(const PipelineConfig& c) {
  json j;
  json input;
  if (!c.input_directory.empty()) input["directory"] = c.input_directory;
  if (!c.stac_endpoint.empty()) input["stac_endpoint"] = c.stac_endpoint;
  if (!c.download_dir.empty()) input["download_dir"] = c.download_dir;
  j["input"] = input;
  j["roi"] = {{"min_x", c.roi.min_x}, {"min_y", c.roi.min_y},
              {"max_x", c.roi.max_x}, {"max_y", c.roi.max_y},
              {"epsg", c.roi.epsg}};
  json windows = json::array();
  for (const auto& w : c.windows) {
    windows.push_back({{"start", format_monthday(w.start_month, w.start_day)},
                       {"end", format_monthday(w.end_month, w.end_day)}});
  }
  j["windows"] = windows;
  j["years"] = {{"first", c.years.first}, {"last", c.years.last}};
  j["max_cloud_pct"] = c.max_cloud_pct;
  j["bands"] = c.bands;
  j["products"] = c.products;
  j["pca_mode"] = c.pca_mode == PcaMode::correlation ? "correlation" : "covariance";
  j["stretch"] = {{"lower_pct", c.stretch_lower_pct},
                  {"upper_pct", c.stretch_upper_pct}};
  j["reflectance_scale"] = c.reflectance_scale;
  j["output_dir"] = c.output_dir;
  return j;
}

}  // namespace

PipelineConfig parse_pipeline_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");

  PipelineConfig c;
  try {
    if (j.contains("input")) {
      const json& in = j.at("input");
      c.input_directory = in.value("directory", "");
      c.stac_endpoint = in.value("stac_endpoint", "");
      c.download_dir = in.value("download_dir", "");
    }
    if (j.contains("roi")) {
      const json& r = j.at("roi");
      c.roi.min_x = r.at("min_x").get<double>();
      c.roi.min_y = r.at("min_y").get<double>();
      c.roi.max_x = r.at("max_x").get<double>();
      c.roi.max_y = r.at("max_y").get<double>();
      c.roi.epsg = r.at("epsg").get<int>();
    }
    if (j.contains("windows")) {
      c.windows.clear();
      for (const auto& w : j.at("windows")) {
        c.windows.push_back(parse_monthday_window(w.at("start").get<std::string>(),
                                                  w.at("end").get<std::string>()));
      }
    }
    if (j.contains("years")) {
      c.years.first = j.at("years").at("first").get<int>();
      c.years.last = j.at("years").at("last").get<int>();
    }
    c.max_cloud_pct = j.value("max_cloud_pct", c.max_cloud_pct);
    if (j.contains("bands")) c.bands = j.at("bands").get<std::vector<std::string>>();
    if (j.contains("products")) {
      c.products = j.at("products").get<std::vector<std::string>>();
    }
    if (j.contains("pca_mode")) {
      std::string m = j.at("pca_mode").get<std::string>();
      if (m == "correlation") {
        c.pca_mode = PcaMode::correlation;
      } else if (m == "covariance") {
        c.pca_mode = PcaMode::covariance;
      } else {
        throw ConfigError("pca_mode must be 'correlation' or 'covariance'");
      }
    }
    if (j.contains("stretch")) {
      c.stretch_lower_pct = j.at("stretch").value("lower_pct", c.stretch_lower_pct);
      c.stretch_upper_pct = j.at("stretch").value("upper_pct", c.stretch_upper_pct);
    }
    c.reflectance_scale = j.value("reflectance_scale", c.reflectance_scale);
    c.output_dir = j.value("output_dir", c.output_dir);
  } catch (const ConfigError&) {
    throw;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config field error: ") + e.what());
  }
  return c;
}

PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return parse_pipeline_config(text);
}

std::string pipeline_config_json(const PipelineConfig& config) {
  return config_to_json(config).dump(2);
}

std::string pipeline_config_hash(const PipelineConfig& config) {
  std::string s = config_to_json(config).dump();
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void validate(const PipelineConfig& c) {
  bool has_dir = !c.input_directory.empty();
  bool has_stac = !c.stac_endpoint.empty();
  if (has_dir == has_stac) {
    throw ConfigError("input: exactly one of directory or stac_endpoint required");
  }
  if (!c.roi.valid()) throw ConfigError("roi: min must be strictly below max");
  if (c.windows.empty()) throw ConfigError("windows: at least one window required");
  for (const auto& w : c.windows) {
    bool fields_ok = w.start_month >= 1 && w.start_month <= 12 &&
                     w.end_month >= 1 && w.end_month <= 12 && w.start_day >= 1 &&
                     w.start_day <= 31 && w.end_day >= 1 && w.end_day <= 31;
    bool ordered = w.start_month < w.end_month ||
                   (w.start_month == w.end_month && w.start_day <= w.end_day);
    if (!fields_ok || !ordered) {
      throw ConfigError("windows: window start must not follow its end within a year");
    }
  }
  if (c.years.first > c.years.last) throw ConfigError("years: first exceeds last");
  if (c.max_cloud_pct < 0.0 || c.max_cloud_pct > 100.0) {
    throw ConfigError("max_cloud_pct: must lie in [0,100]");
  }
  if (c.bands.empty()) throw ConfigError("bands: at least one band required");
  if (c.products.empty()) throw ConfigError("products: at least one product required");
  for (const auto& p : c.products) {
    if (!kKnownProducts.count(p)) throw ConfigError("products: unknown product '" + p + "'");
  }
  if (!(c.stretch_lower_pct >= 0.0 && c.stretch_lower_pct < c.stretch_upper_pct &&
        c.stretch_upper_pct <= 100.0)) {
    throw ConfigError("stretch: lower_pct must be below upper_pct within [0,100]");
  }
  if (c.reflectance_scale <= 0.0) {
    throw ConfigError("reflectance_scale: must be positive");
  }
  if (c.output_dir.empty()) throw ConfigError("output_dir: required");

  std::set<std::string> have(c.bands.begin(), c.bands.end());
  auto need = [&](std::initializer_list<const char*> req, const char* product) {
    for (const char* b : req) {
      if (!have.count(b)) {
        throw ConfigError(std::string("products: ") + product + " requires band " + b);
      }
    }
  };
  for (const auto& p : c.products) {
    if (p == "rgb" || p == "hsv") need({"B2", "B3", "B4"}, p.c_str());
    if (p == "fswir") need({"B4", "B8", "B12"}, p.c_str());
    if (p == "bsi") need({"B2", "B4", "B8", "B12"}, p.c_str());
    if (p == "ndvi") need({"B4", "B8"}, p.c_str());
    if (p == "tct") need({"B2", "B3", "B4", "B8", "B11", "B12"}, p.c_str());
    if (p == "pca") need({"B2", "B3", "B4", "B8"}, p.c_str());
  }
}

std::string window_dir_name(const PipelineConfig& config, int window) {
  const SeasonWindow& w = config.windows.at(window);
  char buf[48];
  std::snprintf(buf, sizeof buf, "window%d_%02d%02d-%02d%02d", window + 1,
                w.start_month, w.start_day, w.end_month, w.end_day);
  return buf;
}

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw IoError("cannot write " + path.string());
  f << text;
  if (!text.empty() && text.back() != '\n') f << "\n";
}

void write_histogram_csv(const Histogram& h, const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw IoError("cannot write " + path.string());
  f << "lo,hi,count\n";
  char line[96];
  for (std::size_t i = 0; i < h.counts.size(); ++i) {
    std::snprintf(line, sizeof line, "%.9g,%.9g,%llu\n", h.bin_edges[i],
                  h.bin_edges[i + 1], static_cast<unsigned long long>(h.counts[i]));
    f << line;
  }
}

std::vector<std::filesystem::path> write_index_product(
    const IndexProduct& product, const std::string& name,
    const std::filesystem::path& dir, const PipelineConfig& cfg) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> files;

  std::filesystem::path tif = dir / (name + ".tif");
  write_geotiff(product.plane, tif, TiffSampleFormat::float32);
  files.push_back(tif);

  StretchParams p = percentile_cut(product.plane, 0, cfg.stretch_lower_pct,
                                   cfg.stretch_upper_pct);
  std::filesystem::path png = dir / (name + ".png");
  write_png(render_gray(product.plane, 0, p), png);
  files.push_back(png);

  std::filesystem::path csv = dir / (name + "_hist.csv");
  write_histogram_csv(histogram(product.plane, 0, 100), csv);
  files.push_back(csv);

  json meta = json::parse(stretch_metadata_json({p}, {product.index_name}));
  meta["formula"] = product.formula_id;
  std::filesystem::path mj = dir / (name + "_stretch.json");
  write_text(mj, meta.dump(2));
  files.push_back(mj);
  return files;
}

std::vector<std::filesystem::path> write_triple_product(
    const CompositeTriple& triple, const std::string& name,
    const std::filesystem::path& dir, const PipelineConfig& cfg) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> files;

  std::filesystem::path tif = dir / (name + ".tif");
  write_geotiff(triple.grid, tif, TiffSampleFormat::float32);
  files.push_back(tif);

  std::array<StretchParams, 3> params;
  std::vector<std::string> band_names;
  for (int ch = 0; ch < 3; ++ch) {
    params[ch] = percentile_cut(triple.grid, ch, cfg.stretch_lower_pct,
                                cfg.stretch_upper_pct);
    band_names.push_back(triple.grid.band(ch).name);
  }
  std::filesystem::path png = dir / (name + ".png");
  write_png(render(triple, params), png);
  files.push_back(png);

  std::filesystem::path mj = dir / (name + "_stretch.json");
  write_text(mj, stretch_metadata_json({params.begin(), params.end()}, band_names));
  files.push_back(mj);
  return files;
}

}  // namespace

std::vector<std::filesystem::path> write_product(const RasterGrid& composite,
                                                 const std::string& product,
                                                 const std::filesystem::path& dir,
                                                 const PipelineConfig& cfg) {
  if (product == "rgb") {
    return write_triple_product(compose(composite, TriplePreset::rgb), "rgb", dir, cfg);
  }
  if (product == "fswir") {
    return write_triple_product(compose(composite, TriplePreset::fswir), "fswir",
                                dir, cfg);
  }
  if (product == "bsi") return write_index_product(bsi(composite), "bsi", dir, cfg);
  if (product == "ndvi") return write_index_product(ndvi(composite), "ndvi", dir, cfg);

  if (product == "hsv") {
    std::filesystem::create_directories(dir);
    std::vector<std::filesystem::path> files;
    CompositeTriple rgb = compose(composite, TriplePreset::rgb);
    std::vector<StretchParams> params;
    std::vector<std::string> band_names;
    for (int ch = 0; ch < 3; ++ch) {
      params.push_back(percentile_cut(rgb.grid, ch, cfg.stretch_lower_pct,
                                      cfg.stretch_upper_pct));
      band_names.push_back(rgb.grid.band(ch).name);
    }
    CompositeTriple unit{normalize_unit(rgb.grid, params), rgb.preset};
    RasterGrid hsv = rgb_to_hsv(unit);

    std::filesystem::path tif = dir / "hsv.tif";
    write_geotiff(hsv, tif, TiffSampleFormat::float32);
    files.push_back(tif);

    // H,S,V are already unit-range; map straight onto bytes
    std::array<StretchParams, 3> unit_params;
    for (auto& p : unit_params) {
      p.lower_pct = 0.0;
      p.upper_pct = 100.0;
      p.lower_value = 0.0;
      p.upper_value = 1.0;
    }
    std::filesystem::path png = dir / "hsv.png";
    write_png(render(CompositeTriple{hsv, TriplePreset::custom}, unit_params), png);
    files.push_back(png);

    std::filesystem::path mj = dir / "hsv_stretch.json";
    write_text(mj, stretch_metadata_json(params, band_names));
    files.push_back(mj);
    return files;
  }

  if (product == "tct") {
    std::filesystem::create_directories(dir);
    std::vector<std::filesystem::path> files;
    RasterGrid bands = tct(composite);

    std::filesystem::path tif = dir / "tct.tif";
    write_geotiff(bands, tif, TiffSampleFormat::float32);
    files.push_back(tif);

    std::array<StretchParams, 3> params;
    std::vector<std::string> names;
    for (int ch = 0; ch < 3; ++ch) {
      params[ch] = percentile_cut(bands, ch, cfg.stretch_lower_pct,
                                  cfg.stretch_upper_pct);
      names.push_back(bands.band(ch).name);
    }
    std::filesystem::path png = dir / "tct.png";
    write_png(render(CompositeTriple{bands, TriplePreset::custom}, params), png);
    files.push_back(png);

    std::filesystem::path mj = dir / "tct_stretch.json";
    write_text(mj, stretch_metadata_json({params.begin(), params.end()}, names));
    files.push_back(mj);
    return files;
  }

  if (product == "pca") {
    std::filesystem::create_directories(dir);
    std::vector<std::filesystem::path> files;
    PcaResult result = pca(composite, default_pca_bands(), cfg.pca_mode);

    std::filesystem::path tif = dir / "pca_scores.tif";
    write_geotiff(result.scores, tif, TiffSampleFormat::float32);
    files.push_back(tif);

    std::filesystem::path report = dir / "pca_report.json";
    write_text(report, pca_report_json(result));
    files.push_back(report);

    BandReportFiles reports = band_report(result.scores, dir, "pca", 100,
                                          cfg.stretch_lower_pct,
                                          cfg.stretch_upper_pct);
    files.insert(files.end(), reports.pngs.begin(), reports.pngs.end());
    files.insert(files.end(), reports.csvs.begin(), reports.csvs.end());
    return files;
  }

  throw ConfigError("unknown product '" + product + "'");
}

namespace {

class Lockfile {
public:
  explicit Lockfile(const std::filesystem::path& path) : path_(path) {
    fd_ = ::open(path.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd_ < 0) {
      throw IoError("another run holds the lock " + path.string() +
                    " (remove it if stale)");
    }
  }
  ~Lockfile() {
    if (fd_ >= 0) {
      ::close(fd_);
      std::error_code ec;
      std::filesystem::remove(path_, ec);
    }
  }
  Lockfile(const Lockfile&) = delete;
  Lockfile& operator=(const Lockfile&) = delete;

private:
  std::filesystem::path path_;
  int fd_ = -1;
};

}  // namespace

RunResult run_pipeline(const PipelineConfig& config) {
  RunResult result;
  auto t_start = std::chrono::steady_clock::now();

  try {
    validate(config);
  } catch (const ConfigError& e) {
    result.exit_code = 1;
    result.message = e.what();
    return result;
  }

  try {
    std::filesystem::create_directories(config.output_dir);
    Lockfile lock(std::filesystem::path(config.output_dir) / ".soilmark.lock");

    // 1. catalog
    Catalog catalog;
    FilterSpec spec;
    spec.windows = config.windows;
    spec.years = config.years;
    spec.max_cloud_pct = config.max_cloud_pct;
    spec.roi = config.roi;

    if (!config.input_directory.empty()) {
      catalog = ingest_directory(config.input_directory);
    } else {
      std::vector<SceneRecord> found = stac_search(config.stac_endpoint, spec);
      std::filesystem::path cache = config.download_dir.empty()
                                        ? std::filesystem::path(config.output_dir) / "scenes"
                                        : std::filesystem::path(config.download_dir);
      for (const auto& rec : found) {
        catalog.records.push_back(fetch_assets(rec, cache));
      }
    }

    // 2. composites (pooled per window; per-year diagnostics are a CLI stage)
    CompositeOptions copt;
    copt.reflectance_scale = config.reflectance_scale;
    std::vector<BucketComposite> buckets =
        window_composites(catalog, spec, config.bands, copt, false);

    json manifest;
    manifest["config"] = json::parse(pipeline_config_json(config));
    manifest["config_hash"] = pipeline_config_hash(config);
    json windows_report = json::array();

    int non_empty = 0;
    for (const auto& bucket : buckets) {
      std::string wname = window_dir_name(config, bucket.key.window);
      json wj;
      wj["name"] = wname;
      if (!bucket.stack) {
        wj["status"] = bucket.message;
        wj["scene_ids"] = json::array();
        windows_report.push_back(wj);
        continue;
      }
      ++non_empty;
      wj["status"] = "ok";
      wj["scene_ids"] = bucket.stack->scene_ids;

      // Quantize through float32 so in-memory products match what the
      // file-chained stages (composite -> index/decompose) produce.
      RasterGrid composite = quantize_float32(bucket.stack->grid);

      auto t_w = std::chrono::steady_clock::now();
      json products = json::array();
      for (const auto& product : config.products) {
        std::filesystem::path dir =
            std::filesystem::path(config.output_dir) / wname / product;
        auto files = write_product(composite, product, dir, config);
        for (const auto& f : files) {
          products.push_back(
              std::filesystem::relative(f, config.output_dir).string());
          result.product_files.push_back(f);
        }
      }
      wj["products"] = products;
      wj["elapsed_ms"] = std::chrono::duration_cast<std::chrono::milliseconds>(
                             std::chrono::steady_clock::now() - t_w)
                             .count();
      windows_report.push_back(wj);
    }

    manifest["windows"] = windows_report;
    manifest["total_ms"] = std::chrono::duration_cast<std::chrono::milliseconds>(
                               std::chrono::steady_clock::now() - t_start)
                               .count();

    if (non_empty == 0) {
      result.exit_code = 3;
      result.message = "all window buckets are empty after filtering";
      write_text(std::filesystem::path(config.output_dir) / "run_manifest.json",
                 manifest.dump(2));
      return result;
    }

    write_text(std::filesystem::path(config.output_dir) / "run_manifest.json",
               manifest.dump(2));
    result.exit_code = 0;
    result.message = "ok";
    return result;
  } catch (const ConfigError& e) {
    result.exit_code = 1;
    result.message = e.what();
    return result;
  } catch (const Error& e) {
    result.exit_code = 2;
    result.message = e.what();
    return result;
  } catch (const std::exception& e) {
    result.exit_code = 2;
    result.message = std::string("unexpected error: ") + e.what();
    return result;
  }
}

}  // namespace soilmark
