// soilmark: seasonal compositing, spectral indices and spectral
// decompositions for buried palaeo-landscape feature enhancement.

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "soilmark/compositor.hpp"
#include "soilmark/datetime.hpp"
#include "soilmark/geotiff.hpp"
#include "soilmark/pipeline.hpp"
#include "soilmark/render.hpp"
#include "soilmark/stac.hpp"
#include "soilmark/synth.hpp"

namespace {

using namespace soilmark;
using nlohmann::json;

RegionOfInterest parse_roi(const std::string& text) {
  RegionOfInterest roi;
  if (std::sscanf(text.c_str(), "%lf,%lf,%lf,%lf,%d", &roi.min_x, &roi.min_y,
                  &roi.max_x, &roi.max_y, &roi.epsg) != 5) {
    throw ConfigError("--roi expects minx,miny,maxx,maxy,epsg");
  }
  return roi;
}

std::vector<SeasonWindow> parse_windows(const std::string& text) {
  std::vector<SeasonWindow> windows;
  std::size_t start = 0;
  while (start < text.size()) {
    auto comma = text.find(',', start);
    std::string token = text.substr(start, comma == std::string::npos
                                               ? std::string::npos
                                               : comma - start);
    SeasonWindow w;
    if (std::sscanf(token.c_str(), "%2d-%2d:%2d-%2d", &w.start_month,
                    &w.start_day, &w.end_month, &w.end_day) != 4) {
      throw ConfigError("--windows expects MM-DD:MM-DD[,MM-DD:MM-DD...]");
    }
    windows.push_back(w);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (windows.empty()) throw ConfigError("--windows parsed no windows");
  return windows;
}

YearRange parse_years(const std::string& text) {
  YearRange y;
  if (std::sscanf(text.c_str(), "%d-%d", &y.first, &y.last) == 2) return y;
  if (std::sscanf(text.c_str(), "%d", &y.first) == 1) {
    y.last = y.first;
    return y;
  }
  throw ConfigError("--years expects YYYY-YYYY or YYYY");
}

std::vector<std::string> split_csv(const std::string& text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto comma = text.find(',', start);
    std::string token = text.substr(start, comma == std::string::npos
                                               ? std::string::npos
                                               : comma - start);
    if (!token.empty()) out.push_back(token);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

void parse_stretch(const std::string& text, double& lo, double& hi) {
  if (std::sscanf(text.c_str(), "%lf,%lf", &lo, &hi) != 2) {
    throw ConfigError("--stretch expects lower,upper percentages");
  }
}

json record_to_json(const SceneRecord& rec) {
  json j;
  j["scene_id"] = rec.scene_id;
  j["acquired_at"] = format_rfc3339(rec.acquired_at);
  j["cloud_cover_pct"] = rec.cloud_cover_pct;
  j["footprint"] = {{"min_x", rec.footprint.min_x}, {"min_y", rec.footprint.min_y},
                    {"max_x", rec.footprint.max_x}, {"max_y", rec.footprint.max_y},
                    {"epsg", rec.footprint.epsg}};
  json bands = json::object();
  for (const auto& [k, v] : rec.band_files) bands[k] = v;
  j["bands"] = bands;
  json urls = json::object();
  for (const auto& [k, v] : rec.band_urls) urls[k] = v;
  if (!urls.empty()) j["asset_urls"] = urls;
  return j;
}

FilterSpec filter_from_flags(const std::string& roi, const std::string& windows,
                             const std::string& years, double max_cloud) {
  FilterSpec spec;
  spec.roi = parse_roi(roi);
  spec.windows = windows.empty() ? default_season_windows() : parse_windows(windows);
  if (!years.empty()) spec.years = parse_years(years);
  spec.max_cloud_pct = max_cloud;
  return spec;
}

int run_ingest(const std::string& root, const std::string& json_out) {
  Catalog cat = ingest_directory(root);
  json listing = json::array();
  for (const auto& rec : cat.records) listing.push_back(record_to_json(rec));
  if (!json_out.empty()) {
    std::ofstream f(json_out, std::ios::trunc);
    if (!f) throw IoError("cannot write " + json_out);
    f << listing.dump(2) << "\n";
  }
  std::cout << cat.size() << " scene(s)\n";
  for (const auto& rec : cat.records) {
    std::cout << "  " << rec.scene_id << "  " << format_rfc3339(rec.acquired_at)
              << "  cloud " << rec.cloud_cover_pct << "%\n";
  }
  return 0;
}

int run_search(const std::string& endpoint, const FilterSpec& spec,
               const std::string& json_out, const std::string& download_dir) {
  std::vector<SceneRecord> records = stac_search(endpoint, spec);
  if (!download_dir.empty()) {
    for (auto& rec : records) rec = fetch_assets(rec, download_dir);
  }
  json listing = json::array();
  for (const auto& rec : records) listing.push_back(record_to_json(rec));
  if (!json_out.empty()) {
    std::ofstream f(json_out, std::ios::trunc);
    if (!f) throw IoError("cannot write " + json_out);
    f << listing.dump(2) << "\n";
  }
  std::cout << records.size() << " scene(s) found\n";
  for (const auto& rec : records) {
    std::cout << "  " << rec.scene_id << "  " << format_rfc3339(rec.acquired_at)
              << "  cloud " << rec.cloud_cover_pct << "%\n";
  }
  return 0;
}

int run_composite(const std::string& input_dir, const FilterSpec& spec,
                  const std::vector<std::string>& bands,
                  const std::string& output_dir, double reflectance_scale,
                  bool per_year) {
  Catalog cat = ingest_directory(input_dir);
  CompositeOptions opt;
  opt.reflectance_scale = reflectance_scale;
  auto buckets = window_composites(cat, spec, bands, opt, per_year);

  PipelineConfig naming;
  naming.windows = spec.windows;

  int written = 0;
  for (const auto& bucket : buckets) {
    std::string name = window_dir_name(naming, bucket.key.window);
    if (bucket.key.year) name += "_y" + std::to_string(*bucket.key.year);
    if (!bucket.stack) {
      std::cerr << name << ": " << bucket.message << "\n";
      continue;
    }
    std::filesystem::path dir = std::filesystem::path(output_dir) / name;
    std::filesystem::create_directories(dir);

    write_geotiff(quantize_float32(bucket.stack->grid), dir / "composite.tif",
                  TiffSampleFormat::float32);

    RasterGrid counts(bucket.stack->grid.width(), bucket.stack->grid.height(),
                      {derived_band("count")}, bucket.stack->grid.geo());
    auto cm = counts.mask();
    for (std::size_t i = 0; i < counts.pixel_count(); ++i) {
      counts.plane(0)[i] = bucket.stack->counts[i];
      cm[i] = bucket.stack->counts[i] > 0;
    }
    GeoTiffWriteOptions co;
    co.sample_format = TiffSampleFormat::uint16;
    co.uint16_scale = 1.0;
    write_geotiff(counts, dir / "counts.tif", co);

    json prov;
    prov["scene_ids"] = bucket.stack->scene_ids;
    prov["window"] = window_dir_name(naming, bucket.key.window);
    if (bucket.key.year) prov["year"] = *bucket.key.year;
    prov["bands"] = bands;
    prov["reflectance_scale"] = reflectance_scale;
    const FilterSpec& used = bucket.stack->filter;
    json windows_json = json::array();
    for (const auto& w : used.windows) {
      char wb[16];
      std::snprintf(wb, sizeof wb, "%02d-%02d:%02d-%02d", w.start_month,
                    w.start_day, w.end_month, w.end_day);
      windows_json.push_back(wb);
    }
    prov["filter"] = {{"windows", windows_json},
                      {"years", {{"first", used.years.first}, {"last", used.years.last}}},
                      {"max_cloud_pct", used.max_cloud_pct},
                      {"roi", {{"min_x", used.roi.min_x}, {"min_y", used.roi.min_y},
                               {"max_x", used.roi.max_x}, {"max_y", used.roi.max_y},
                               {"epsg", used.roi.epsg}}}};
    std::ofstream f(dir / "provenance.json", std::ios::trunc);
    f << prov.dump(2) << "\n";
    ++written;
    std::cout << name << ": composite over " << bucket.stack->scene_ids.size()
              << " scene(s)\n";
  }
  return written == 0 ? 3 : 0;
}

int run_products(const std::string& composite_path,
                 const std::vector<std::string>& products,
                 const std::string& output_dir, const PipelineConfig& cfg) {
  GeoTiffReadResult file = read_geotiff(composite_path);
  for (const auto& product : products) {
    auto files = write_product(file.grid, product,
                               std::filesystem::path(output_dir) / product, cfg);
    std::cout << product << ": " << files.size() << " file(s)\n";
  }
  return 0;
}

int run_render(const std::string& input, const std::string& output,
               const std::string& band, double lo_pct, double hi_pct) {
  GeoTiffReadResult file = read_geotiff(input);
  const RasterGrid& grid = file.grid;
  if (!band.empty() || grid.band_count() == 1) {
    int b = band.empty() ? 0 : grid.require_band(band);
    StretchParams p = percentile_cut(grid, b, lo_pct, hi_pct);
    write_png(render_gray(grid, b, p), output);
  } else if (grid.band_count() >= 3) {
    CompositeTriple triple{grid, TriplePreset::custom};
    if (grid.band_count() > 3) {
      triple = compose(grid, {grid.band(0).name, grid.band(1).name,
                              grid.band(2).name});
    }
    std::array<StretchParams, 3> params;
    for (int ch = 0; ch < 3; ++ch) {
      params[ch] = percentile_cut(triple.grid, ch, lo_pct, hi_pct);
    }
    write_png(render(triple, params), output);
  } else {
    throw ConfigError("render needs a single band (--band) or >= 3 bands");
  }
  std::cout << output << "\n";
  return 0;
}

int run_synth(const std::string& output_dir, int scenes, int width, int height,
              double noise_sd, double contrast, std::uint64_t seed,
              const std::string& feature_kind) {
  SceneSetSpec spec;
  spec.n_scenes = scenes;
  spec.width = width;
  spec.height = height;
  spec.noise_sd = noise_sd;
  spec.seed = seed;

  if (feature_kind == "palaeochannel") {
    spec.features.push_back(default_palaeochannel(spec, contrast));
  } else if (feature_kind == "moat") {
    FeatureSpec f;
    double cx = spec.geo.origin_x + width * spec.geo.pixel_width / 2.0;
    double cy = spec.geo.origin_y - height * spec.geo.pixel_height / 2.0;
    f.shape = MoatRingFeature{cx, cy, width * spec.geo.pixel_width * 0.15,
                              width * spec.geo.pixel_width * 0.2};
    f.contrast = palaeochannel_contrast(contrast);
    spec.features.push_back(f);
  } else if (feature_kind == "rect") {
    FeatureSpec f;
    double x0 = spec.geo.origin_x + width * spec.geo.pixel_width * 0.4;
    double y1 = spec.geo.origin_y - height * spec.geo.pixel_height * 0.4;
    f.shape = RectFeature{x0, y1 - height * spec.geo.pixel_height * 0.2,
                          x0 + width * spec.geo.pixel_width * 0.2, y1};
    f.contrast = palaeochannel_contrast(contrast);
    spec.features.push_back(f);
  } else if (feature_kind != "none") {
    throw ConfigError("--feature must be palaeochannel, moat, rect or none");
  }

  SceneSetResult result = generate_scene_set(spec, output_dir);
  std::cout << result.catalog.size() << " scene(s) written to " << output_dir
            << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"soilmark: multi-temporal Sentinel-2 style compositing, spectral "
               "indices and decompositions for palaeo-landscape enhancement"};
  app.require_subcommand(1);

  // ---- pipeline ----
  auto* sub_pipeline = app.add_subcommand("pipeline", "run the full protocol");
  std::string cfg_path, out_override, roi_flag, windows_flag, years_flag;
  std::string products_flag, stretch_flag, pca_mode_flag, input_dir_flag,
      endpoint_flag, bands_flag;
  double max_cloud_flag = -1.0;
  sub_pipeline->add_option("--config", cfg_path, "pipeline config JSON");
  sub_pipeline->add_option("--output", out_override, "output directory override");
  sub_pipeline->add_option("--input-dir", input_dir_flag, "scene directory override");
  sub_pipeline->add_option("--stac-endpoint", endpoint_flag, "STAC endpoint override");
  sub_pipeline->add_option("--roi", roi_flag, "minx,miny,maxx,maxy,epsg");
  sub_pipeline->add_option("--windows", windows_flag, "MM-DD:MM-DD[,...]");
  sub_pipeline->add_option("--years", years_flag, "YYYY-YYYY");
  sub_pipeline->add_option("--max-cloud", max_cloud_flag, "cloud cover ceiling (%)");
  sub_pipeline->add_option("--products", products_flag, "comma-separated subset");
  sub_pipeline->add_option("--bands", bands_flag, "comma-separated band names");
  sub_pipeline->add_option("--stretch", stretch_flag, "lower,upper percents");
  sub_pipeline->add_option("--pca-mode", pca_mode_flag, "correlation|covariance");

  // ---- ingest ----
  auto* sub_ingest = app.add_subcommand("ingest", "scan a scene directory");
  std::string ingest_root, ingest_json;
  sub_ingest->add_option("root", ingest_root, "directory with *.scene.json sidecars")
      ->required();
  sub_ingest->add_option("--json", ingest_json, "write the catalog listing here");

  // ---- search ----
  auto* sub_search = app.add_subcommand("search", "query a STAC endpoint");
  std::string search_endpoint, search_roi, search_windows, search_years;
  std::string search_json, search_download;
  double search_cloud = 20.0;
  sub_search->add_option("--endpoint", search_endpoint,
                         "STAC root URL (or env SOILMARK_STAC_ENDPOINT)");
  sub_search->add_option("--roi", search_roi, "minx,miny,maxx,maxy,epsg")->required();
  sub_search->add_option("--windows", search_windows, "MM-DD:MM-DD[,...]");
  sub_search->add_option("--years", search_years, "YYYY-YYYY");
  sub_search->add_option("--max-cloud", search_cloud, "cloud cover ceiling (%)");
  sub_search->add_option("--json", search_json, "write found records here");
  sub_search->add_option("--download", search_download, "fetch assets into this dir");

  // ---- composite ----
  auto* sub_composite = app.add_subcommand("composite", "seasonal mean composites");
  std::string comp_input, comp_output, comp_roi, comp_windows, comp_years,
      comp_bands;
  double comp_cloud = 20.0, comp_scale = 1e-4;
  bool comp_per_year = false;
  sub_composite->add_option("--input", comp_input, "scene directory")->required();
  sub_composite->add_option("--output", comp_output, "output directory")->required();
  sub_composite->add_option("--roi", comp_roi, "minx,miny,maxx,maxy,epsg")->required();
  sub_composite->add_option("--windows", comp_windows, "MM-DD:MM-DD[,...]");
  sub_composite->add_option("--years", comp_years, "YYYY-YYYY");
  sub_composite->add_option("--max-cloud", comp_cloud, "cloud cover ceiling (%)");
  sub_composite->add_option("--bands", comp_bands, "comma-separated band names");
  sub_composite->add_option("--reflectance-scale", comp_scale, "DN -> reflectance");
  sub_composite->add_flag("--per-year", comp_per_year, "also per-year buckets");

  // ---- index ----
  auto* sub_index = app.add_subcommand("index", "spectral index products");
  std::string idx_composite, idx_products = "bsi,ndvi", idx_output,
              idx_stretch;
  sub_index->add_option("--composite", idx_composite, "composite GeoTIFF")->required();
  sub_index->add_option("--products", idx_products, "subset of rgb,fswir,bsi,ndvi");
  sub_index->add_option("--output", idx_output, "output directory")->required();
  sub_index->add_option("--stretch", idx_stretch, "lower,upper percents");

  // ---- decompose ----
  auto* sub_decompose = app.add_subcommand("decompose", "HSV/TCT/PCA products");
  std::string dec_composite, dec_products = "hsv,tct,pca", dec_output,
              dec_stretch, dec_pca_mode = "correlation";
  sub_decompose->add_option("--composite", dec_composite, "composite GeoTIFF")
      ->required();
  sub_decompose->add_option("--products", dec_products, "subset of hsv,tct,pca");
  sub_decompose->add_option("--output", dec_output, "output directory")->required();
  sub_decompose->add_option("--stretch", dec_stretch, "lower,upper percents");
  sub_decompose->add_option("--pca-mode", dec_pca_mode, "correlation|covariance");

  // ---- render ----
  auto* sub_render = app.add_subcommand("render", "stretch a raster to PNG");
  std::string ren_input, ren_output, ren_band, ren_stretch = "2,98";
  sub_render->add_option("--input", ren_input, "GeoTIFF to render")->required();
  sub_render->add_option("--output", ren_output, "PNG path")->required();
  sub_render->add_option("--band", ren_band, "render this band as grayscale");
  sub_render->add_option("--stretch", ren_stretch, "lower,upper percents");

  // ---- synth ----
  auto* sub_synth = app.add_subcommand("synth", "generate a synthetic scene set");
  std::string syn_output, syn_feature = "palaeochannel";
  int syn_scenes = 12, syn_width = 256, syn_height = 256;
  double syn_noise = 0.02, syn_contrast = 0.05;
  std::uint64_t syn_seed = 42;
  sub_synth->add_option("--output", syn_output, "scene set directory")->required();
  sub_synth->add_option("--scenes", syn_scenes, "number of scenes");
  sub_synth->add_option("--width", syn_width, "width in 10 m pixels (even)");
  sub_synth->add_option("--height", syn_height, "height in 10 m pixels (even)");
  sub_synth->add_option("--noise-sd", syn_noise, "per-scene reflectance noise sd");
  sub_synth->add_option("--contrast", syn_contrast, "peak feature contrast");
  sub_synth->add_option("--seed", syn_seed, "RNG seed");
  sub_synth->add_option("--feature", syn_feature, "palaeochannel|moat|rect|none");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sub_pipeline->parsed()) {
      PipelineConfig cfg;
      if (!cfg_path.empty()) cfg = load_pipeline_config(cfg_path);
      if (!out_override.empty()) cfg.output_dir = out_override;
      if (!input_dir_flag.empty()) {
        cfg.input_directory = input_dir_flag;
        cfg.stac_endpoint.clear();
      }
      if (!endpoint_flag.empty()) {
        cfg.stac_endpoint = endpoint_flag;
        cfg.input_directory.clear();
      }
      if (!roi_flag.empty()) cfg.roi = parse_roi(roi_flag);
      if (!windows_flag.empty()) cfg.windows = parse_windows(windows_flag);
      if (!years_flag.empty()) cfg.years = parse_years(years_flag);
      if (max_cloud_flag >= 0.0) cfg.max_cloud_pct = max_cloud_flag;
      if (!products_flag.empty()) cfg.products = split_csv(products_flag);
      if (!bands_flag.empty()) cfg.bands = split_csv(bands_flag);
      if (!stretch_flag.empty()) {
        parse_stretch(stretch_flag, cfg.stretch_lower_pct, cfg.stretch_upper_pct);
      }
      if (!pca_mode_flag.empty()) {
        if (pca_mode_flag == "correlation") {
          cfg.pca_mode = PcaMode::correlation;
        } else if (pca_mode_flag == "covariance") {
          cfg.pca_mode = PcaMode::covariance;
        } else {
          throw ConfigError("--pca-mode must be correlation or covariance");
        }
      }
      if (const char* env = std::getenv("SOILMARK_STAC_ENDPOINT");
          env && *env && !cfg.stac_endpoint.empty()) {
        cfg.stac_endpoint = env;
      }

      RunResult result = run_pipeline(cfg);
      if (result.exit_code == 0) {
        std::cout << result.product_files.size() << " product file(s) under "
                  << cfg.output_dir << "\n";
      } else {
        std::cerr << "error: " << result.message << "\n";
      }
      return result.exit_code;
    }

    if (sub_ingest->parsed()) return run_ingest(ingest_root, ingest_json);

    if (sub_search->parsed()) {
      std::string endpoint = search_endpoint;
      if (endpoint.empty()) {
        if (const char* env = std::getenv("SOILMARK_STAC_ENDPOINT"); env && *env) {
          endpoint = env;
        }
      }
      if (endpoint.empty()) {
        throw ConfigError("--endpoint or SOILMARK_STAC_ENDPOINT required");
      }
      FilterSpec spec =
          filter_from_flags(search_roi, search_windows, search_years, search_cloud);
      return run_search(endpoint, spec, search_json, search_download);
    }

    if (sub_composite->parsed()) {
      FilterSpec spec =
          filter_from_flags(comp_roi, comp_windows, comp_years, comp_cloud);
      std::vector<std::string> bands =
          comp_bands.empty()
              ? std::vector<std::string>{"B2", "B3", "B4", "B8", "B11", "B12"}
              : split_csv(comp_bands);
      return run_composite(comp_input, spec, bands, comp_output, comp_scale,
                           comp_per_year);
    }

    if (sub_index->parsed() || sub_decompose->parsed()) {
      bool is_index = sub_index->parsed();
      PipelineConfig cfg;  // stretch/pca defaults feed write_product
      std::string stretch = is_index ? idx_stretch : dec_stretch;
      if (!stretch.empty()) {
        parse_stretch(stretch, cfg.stretch_lower_pct, cfg.stretch_upper_pct);
      }
      if (!is_index) {
        if (dec_pca_mode == "correlation") {
          cfg.pca_mode = PcaMode::correlation;
        } else if (dec_pca_mode == "covariance") {
          cfg.pca_mode = PcaMode::covariance;
        } else {
          throw ConfigError("--pca-mode must be correlation or covariance");
        }
      }
      return run_products(is_index ? idx_composite : dec_composite,
                          split_csv(is_index ? idx_products : dec_products),
                          is_index ? idx_output : dec_output, cfg);
    }

    if (sub_render->parsed()) {
      double lo = 2.0, hi = 98.0;
      parse_stretch(ren_stretch, lo, hi);
      return run_render(ren_input, ren_output, ren_band, lo, hi);
    }

    if (sub_synth->parsed()) {
      return run_synth(syn_output, syn_scenes, syn_width, syn_height, syn_noise,
                       syn_contrast, syn_seed, syn_feature);
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
