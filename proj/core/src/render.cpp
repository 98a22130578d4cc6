#include "soilmark/render.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

namespace soilmark {

namespace {

void check_percents(double lower_pct, double upper_pct) {
  if (!(lower_pct >= 0.0 && lower_pct < upper_pct && upper_pct <= 100.0)) {
    throw InvalidArgument("percent cuts must satisfy 0 <= lower < upper <= 100");
  }
}

std::vector<double> valid_samples(const RasterGrid& grid, int band) {
  auto mask = grid.mask();
  auto plane = grid.plane(band);
  std::vector<double> v;
  v.reserve(grid.pixel_count());
  for (std::size_t i = 0; i < plane.size(); ++i) {
    if (mask[i]) v.push_back(plane[i]);
  }
  if (v.empty()) throw EmptyBand("band " + grid.band(band).name + " has no valid pixels");
  return v;
}

double interpolate_sorted(const std::vector<double>& sorted, double pct) {
  const double pos = pct / 100.0 * (static_cast<double>(sorted.size()) - 1.0);
  std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  double frac = pos - static_cast<double>(lo);
  return sorted[lo] + (sorted[hi] - sorted[lo]) * frac;
}

}  // namespace

StretchParams percentile_cut(const RasterGrid& grid, int band, double lower_pct,
                             double upper_pct) {
  check_percents(lower_pct, upper_pct);
  std::vector<double> v = valid_samples(grid, band);
  std::sort(v.begin(), v.end());
  StretchParams p;
  p.lower_pct = lower_pct;
  p.upper_pct = upper_pct;
  p.lower_value = interpolate_sorted(v, lower_pct);
  p.upper_value = interpolate_sorted(v, upper_pct);
  return p;
}

StretchParams percentile_cut_approx(const RasterGrid& grid, int band,
                                    double lower_pct, double upper_pct,
                                    int nbins) {
  check_percents(lower_pct, upper_pct);
  if (nbins < 2) throw InvalidArgument("approximate cut needs at least 2 bins");
  std::vector<double> v = valid_samples(grid, band);
  auto [mn_it, mx_it] = std::minmax_element(v.begin(), v.end());
  double mn = *mn_it, mx = *mx_it;

  StretchParams p;
  p.lower_pct = lower_pct;
  p.upper_pct = upper_pct;
  if (mn == mx) {
    p.lower_value = p.upper_value = mn;
    return p;
  }

  std::vector<std::uint64_t> counts(nbins, 0);
  const double width = (mx - mn) / nbins;
  for (double x : v) {
    int bin = std::min(nbins - 1, static_cast<int>((x - mn) / width));
    counts[bin] += 1;
  }
  auto cut_at = [&](double pct) {
    const double target = pct / 100.0 * static_cast<double>(v.size());
    std::uint64_t cum = 0;
    for (int b = 0; b < nbins; ++b) {
      std::uint64_t next = cum + counts[b];
      if (static_cast<double>(next) >= target) {
        double inside = counts[b] > 0
                            ? (target - static_cast<double>(cum)) /
                                  static_cast<double>(counts[b])
                            : 0.0;
        return mn + (b + inside) * width;
      }
      cum = next;
    }
    return mx;
  };
  p.lower_value = cut_at(lower_pct);
  p.upper_value = cut_at(upper_pct);
  if (p.lower_value > p.upper_value) std::swap(p.lower_value, p.upper_value);
  return p;
}

std::vector<std::uint8_t> stretch_to_bytes(const RasterGrid& grid, int band,
                                           const StretchParams& params) {
  const double lo = params.lower_value;
  const double hi = params.upper_value;
  auto mask = grid.mask();
  auto plane = grid.plane(band);
  std::vector<std::uint8_t> out(grid.pixel_count(), 0);
  if (hi <= lo) return out;  // constant band: all valid pixels map to 0
  const double scale = 255.0 / (hi - lo);
  for (std::size_t i = 0; i < plane.size(); ++i) {
    if (!mask[i]) continue;
    double v = std::clamp(plane[i], lo, hi);
    out[i] = static_cast<std::uint8_t>(std::llround((v - lo) * scale));
  }
  return out;
}

RasterGrid normalize_unit(const RasterGrid& grid,
                          const std::vector<StretchParams>& params) {
  if (static_cast<int>(params.size()) != grid.band_count()) {
    throw InvalidArgument("one StretchParams per band required");
  }
  RasterGrid out = grid;
  auto mask = out.mask();
  for (int b = 0; b < out.band_count(); ++b) {
    const double lo = params[b].lower_value;
    const double hi = params[b].upper_value;
    auto p = out.plane(b);
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (!mask[i]) continue;
      p[i] = hi > lo ? (std::clamp(p[i], lo, hi) - lo) / (hi - lo) : 0.0;
    }
  }
  return out;
}

Histogram histogram(const RasterGrid& grid, int band, int nbins,
                    std::optional<std::pair<double, double>> range) {
  if (nbins < 1) throw InvalidArgument("histogram needs at least one bin");
  std::vector<double> v = valid_samples(grid, band);

  double lo, hi;
  if (range) {
    lo = range->first;
    hi = range->second;
    if (!(lo < hi)) throw InvalidArgument("histogram range must satisfy lo < hi");
  } else {
    auto [mn, mx] = std::minmax_element(v.begin(), v.end());
    lo = *mn;
    hi = *mx;
  }

  Histogram h;
  h.counts.assign(nbins, 0);
  h.bin_edges.resize(nbins + 1);
  if (lo == hi) {
    // degenerate range: widen symbolically so edges stay strictly ascending
    double eps = lo == 0.0 ? 1.0 : std::abs(lo) * 1e-9;
    lo -= eps;
    hi += eps;
  }
  const double width = (hi - lo) / nbins;
  for (int b = 0; b <= nbins; ++b) h.bin_edges[b] = lo + b * width;
  h.bin_edges[nbins] = hi;

  for (double x : v) {
    if (x < lo || x > hi) continue;  // outside an explicit range
    int bin = x >= hi ? nbins - 1
                      : static_cast<int>((x - lo) / width);
    bin = std::clamp(bin, 0, nbins - 1);
    h.counts[bin] += 1;
    h.valid_total += 1;
  }
  return h;
}

ByteImage render(const CompositeTriple& triple,
                 const std::array<StretchParams, 3>& params) {
  const RasterGrid& grid = triple.grid;
  if (grid.band_count() != 3) {
    throw InvalidArgument("render expects a three-band triple");
  }
  ByteImage img = make_byte_image(grid.width(), grid.height(), 3);
  for (int ch = 0; ch < 3; ++ch) {
    auto bytes = stretch_to_bytes(grid, ch, params[ch]);
    for (std::size_t i = 0; i < bytes.size(); ++i) {
      img.pixels[i * 3 + ch] = bytes[i];
    }
  }
  return img;
}

ByteImage render_gray(const RasterGrid& grid, int band,
                      const StretchParams& params) {
  ByteImage img = make_byte_image(grid.width(), grid.height(), 1);
  img.pixels = stretch_to_bytes(grid, band, params);
  return img;
}

BandReportFiles band_report(const RasterGrid& stack,
                            const std::filesystem::path& out_dir,
                            const std::string& prefix, int nbins,
                            double lower_pct, double upper_pct) {
  if (stack.band_count() < 1) throw InvalidArgument("band_report needs bands");
  std::filesystem::create_directories(out_dir);

  BandReportFiles files;
  for (int b = 0; b < stack.band_count(); ++b) {
    const std::string band_name = stack.band(b).name;
    StretchParams p = percentile_cut(stack, b, lower_pct, upper_pct);
    ByteImage img = render_gray(stack, b, p);
    std::filesystem::path png = out_dir / (prefix + "_" + band_name + ".png");
    write_png(img, png);
    files.pngs.push_back(png);

    Histogram h = histogram(stack, b, nbins);
    std::filesystem::path csv = out_dir / (prefix + "_" + band_name + "_hist.csv");
    std::ofstream f(csv, std::ios::trunc);
    if (!f) throw IoError("cannot write " + csv.string());
    f << "lo,hi,count\n";
    char line[96];
    for (std::size_t i = 0; i < h.counts.size(); ++i) {
      std::snprintf(line, sizeof line, "%.9g,%.9g,%llu\n", h.bin_edges[i],
                    h.bin_edges[i + 1],
                    static_cast<unsigned long long>(h.counts[i]));
      f << line;
    }
    if (!f) throw IoError("write failure on " + csv.string());
    files.csvs.push_back(csv);
  }
  return files;
}

std::string stretch_metadata_json(const std::vector<StretchParams>& params,
                                  const std::vector<std::string>& band_names) {
  nlohmann::json j;
  j["quantile_definition"] = "linear interpolation at p*(N-1)";
  j["rounding"] = "half away from zero";
  nlohmann::json channels = nlohmann::json::array();
  for (std::size_t i = 0; i < params.size(); ++i) {
    nlohmann::json c;
    c["band"] = i < band_names.size() ? band_names[i] : "band_" + std::to_string(i + 1);
    c["lower_pct"] = params[i].lower_pct;
    c["upper_pct"] = params[i].upper_pct;
    c["lower_value"] = params[i].lower_value;
    c["upper_value"] = params[i].upper_value;
    channels.push_back(c);
  }
  j["channels"] = channels;
  return j.dump(2);
}

}  // namespace soilmark
