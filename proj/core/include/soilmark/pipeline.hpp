#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "soilmark/catalog.hpp"
#include "soilmark/compositor.hpp"
#include "soilmark/decompose.hpp"
#include "soilmark/raster.hpp"

namespace soilmark {

// Declarative run description; replaces the notebook-style parameter cells
// with one reproducible JSON document.
struct PipelineConfig {
  // exactly one input: a scene directory or a STAC endpoint
  std::string input_directory;
  std::string stac_endpoint;
  std::string download_dir;  // asset cache for STAC inputs

  RegionOfInterest roi;
  std::vector<SeasonWindow> windows = default_season_windows();
  YearRange years{2015, 2020};
  double max_cloud_pct = 20.0;
  std::vector<std::string> bands = {"B2", "B3", "B4", "B8", "B11", "B12"};
  std::vector<std::string> products = {"rgb", "fswir", "bsi", "ndvi",
                                       "hsv",  "tct",  "pca"};
  PcaMode pca_mode = PcaMode::correlation;
  double stretch_lower_pct = 2.0;
  double stretch_upper_pct = 98.0;
  double reflectance_scale = 1e-4;
  std::string output_dir;
};

PipelineConfig parse_pipeline_config(const std::string& json_text);
PipelineConfig load_pipeline_config(const std::filesystem::path& path);
// Canonical JSON (sorted keys); two configs serialize equal iff they agree
// on every semantically meaningful field.
std::string pipeline_config_json(const PipelineConfig& config);
// FNV-1a over the canonical JSON.
std::string pipeline_config_hash(const PipelineConfig& config);
// Throws ConfigError naming the offending field.
void validate(const PipelineConfig& config);

// "window1_0101-0331" style directory name for window index w.
std::string window_dir_name(const PipelineConfig& config, int window);

// Writes one product family (rgb|fswir|bsi|ndvi|hsv|tct|pca) computed from a
// float32-quantized composite into dir. Returns the files written. Shared by
// the single-shot pipeline and the stage subcommands so both routes emit
// byte-identical files.
std::vector<std::filesystem::path> write_product(const RasterGrid& composite,
                                                 const std::string& product,
                                                 const std::filesystem::path& dir,
                                                 const PipelineConfig& config);

struct RunResult {
  int exit_code = 0;  // 0 ok, 1 config, 2 input/data, 3 all buckets empty
  std::string message;
  std::vector<std::filesystem::path> product_files;
};

// ingest/search -> filter -> pooled window composites -> products + reports,
// plus a machine-readable run manifest. Never throws; failures map onto the
// exit-code scheme.
RunResult run_pipeline(const PipelineConfig& config);

}  // namespace soilmark
