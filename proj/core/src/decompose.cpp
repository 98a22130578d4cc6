#include "soilmark/decompose.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <nlohmann/json.hpp>

#include "strips.hpp"

namespace soilmark {

namespace {

// Neumaier-compensated accumulator; merging preserves the compensation term.
struct CompensatedSum {
  double sum = 0.0;
  double comp = 0.0;

  void add(double x) {
    double t = sum + x;
    if (std::abs(sum) >= std::abs(x)) {
      comp += (sum - t) + x;
    } else {
      comp += (x - t) + sum;
    }
    sum = t;
  }
  void merge(const CompensatedSum& other) {
    add(other.sum);
    add(other.comp);
  }
  double value() const { return sum + comp; }
};

}  // namespace

RasterGrid rgb_to_hsv(const CompositeTriple& triple) {
  const RasterGrid& grid = triple.grid;
  if (grid.band_count() != 3) {
    throw InvalidArgument("rgb_to_hsv expects a three-band triple");
  }
  RasterGrid out(grid.width(), grid.height(),
                 {derived_band("H"), derived_band("S"), derived_band("V")},
                 grid.geo());
  std::copy(grid.mask().begin(), grid.mask().end(), out.mask().begin());

  auto rp = grid.plane(0);
  auto gp = grid.plane(1);
  auto bp = grid.plane(2);
  auto hp = out.plane(0);
  auto sp = out.plane(1);
  auto vp = out.plane(2);
  auto mask = grid.mask();

  for (std::size_t i = 0; i < grid.pixel_count(); ++i) {
    if (!mask[i]) continue;
    double r = rp[i], g = gp[i], b = bp[i];
    if (r < 0.0 || r > 1.0 || g < 0.0 || g > 1.0 || b < 0.0 || b > 1.0) {
      throw OutOfRange("rgb_to_hsv input outside [0,1]; stretch to unit range first");
    }
    double v = std::max({r, g, b});
    double lo = std::min({r, g, b});
    double delta = v - lo;
    double s = v > 0.0 ? delta / v : 0.0;
    double h = 0.0;
    if (delta > 0.0) {
      if (v == r) {
        h = (g - b) / delta;
        if (h < 0.0) h += 6.0;
      } else if (v == g) {
        h = (b - r) / delta + 2.0;
      } else {
        h = (r - g) / delta + 4.0;
      }
      h /= 6.0;
      if (h >= 1.0) h -= 1.0;
    }
    hp[i] = h;
    sp[i] = s;
    vp[i] = v;
  }
  return out;
}

RasterGrid hsv_to_rgb(const RasterGrid& hsv) {
  if (hsv.band_count() != 3) {
    throw InvalidArgument("hsv_to_rgb expects a three-band grid");
  }
  RasterGrid out(hsv.width(), hsv.height(),
                 {derived_band("R"), derived_band("G"), derived_band("B")},
                 hsv.geo());
  std::copy(hsv.mask().begin(), hsv.mask().end(), out.mask().begin());

  auto hp = hsv.plane(0);
  auto sp = hsv.plane(1);
  auto vp = hsv.plane(2);
  auto mask = hsv.mask();

  for (std::size_t i = 0; i < hsv.pixel_count(); ++i) {
    if (!mask[i]) continue;
    double h = hp[i] * 6.0;
    double s = sp[i];
    double v = vp[i];
    int sector = static_cast<int>(std::floor(h)) % 6;
    if (sector < 0) sector += 6;
    double f = h - std::floor(h);
    double p = v * (1.0 - s);
    double q = v * (1.0 - s * f);
    double t = v * (1.0 - s * (1.0 - f));
    double r, g, b;
    switch (sector) {
      case 0: r = v; g = t; b = p; break;
      case 1: r = q; g = v; b = p; break;
      case 2: r = p; g = v; b = t; break;
      case 3: r = p; g = q; b = v; break;
      case 4: r = t; g = p; b = v; break;
      default: r = v; g = p; b = q; break;
    }
    out.plane(0)[i] = r;
    out.plane(1)[i] = g;
    out.plane(2)[i] = b;
  }
  return out;
}

TctCoefficients TctCoefficients::sentinel2() {
  TctCoefficients c;
  c.weights = {{
      {0.3510, 0.3813, 0.3437, 0.7196, 0.2396, 0.1949},     // brightness
      {-0.3599, -0.3533, -0.4734, 0.6633, -0.0087, -0.2856},  // greenness
      {0.2578, 0.2305, 0.0883, 0.1071, -0.7611, -0.5308},     // wetness
  }};
  c.bias = {0.0, 0.0, 0.0};
  return c;
}

RasterGrid tct(const RasterGrid& stack, const TctCoefficients& coeffs) {
  static const char* kInputBands[6] = {"B2", "B3", "B4", "B8", "B11", "B12"};
  std::array<int, 6> idx{};
  for (int i = 0; i < 6; ++i) idx[i] = stack.require_band(kInputBands[i]);

  RasterGrid out(stack.width(), stack.height(),
                 {derived_band("TCTb"), derived_band("TCTg"), derived_band("TCTw")},
                 stack.geo());
  std::copy(stack.mask().begin(), stack.mask().end(), out.mask().begin());
  auto mask = stack.mask();

  detail::parallel_strips(stack.height(), [&](int r0, int r1, int) {
    std::size_t begin = std::size_t(r0) * stack.width();
    std::size_t end = std::size_t(r1) * stack.width();
    for (std::size_t i = begin; i < end; ++i) {
      if (!mask[i]) continue;
      double bands[6];
      for (int b = 0; b < 6; ++b) bands[b] = stack.plane(idx[b])[i];
      for (int row = 0; row < 3; ++row) {
        double acc = coeffs.bias[row];
        for (int b = 0; b < 6; ++b) acc += coeffs.weights[row][b] * bands[b];
        out.plane(row)[i] = acc;
      }
    }
  });
  return out;
}

std::vector<std::string> default_pca_bands() { return {"B2", "B3", "B4", "B8"}; }

void jacobi_eigen(std::vector<double>& a, int n, std::vector<double>& eigenvalues,
                  std::vector<double>& eigenvectors, double tolerance,
                  int max_sweeps) {
  auto at = [&](std::vector<double>& m, int i, int j) -> double& {
    return m[std::size_t(i) * n + j];
  };
  eigenvectors.assign(std::size_t(n) * n, 0.0);
  for (int i = 0; i < n; ++i) at(eigenvectors, i, i) = 1.0;

  auto off_norm = [&]() {
    double s = 0.0;
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) s += at(a, i, j) * at(a, i, j);
    }
    return std::sqrt(2.0 * s);
  };

  for (int sweep = 0; sweep < max_sweeps && off_norm() > tolerance; ++sweep) {
    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        double apq = at(a, p, q);
        if (apq == 0.0) continue;
        double app = at(a, p, p);
        double aqq = at(a, q, q);
        double theta = (aqq - app) / (2.0 * apq);
        double t = (theta >= 0.0 ? 1.0 : -1.0) /
                   (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        double c = 1.0 / std::sqrt(t * t + 1.0);
        double s = t * c;

        for (int k = 0; k < n; ++k) {
          double akp = at(a, k, p);
          double akq = at(a, k, q);
          at(a, k, p) = c * akp - s * akq;
          at(a, k, q) = s * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          double apk = at(a, p, k);
          double aqk = at(a, q, k);
          at(a, p, k) = c * apk - s * aqk;
          at(a, q, k) = s * apk + c * aqk;
        }
        for (int k = 0; k < n; ++k) {
          double vkp = at(eigenvectors, k, p);
          double vkq = at(eigenvectors, k, q);
          at(eigenvectors, k, p) = c * vkp - s * vkq;
          at(eigenvectors, k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  eigenvalues.resize(n);
  for (int i = 0; i < n; ++i) eigenvalues[i] = at(a, i, i);
}

PcaResult pca(const RasterGrid& stack, const std::vector<std::string>& bands,
              PcaMode mode) {
  const int k = static_cast<int>(bands.size());
  if (k < 2) throw InvalidArgument("pca requires at least two bands");
  if (k > 8) throw InvalidArgument("pca supports at most 8 bands");
  std::vector<int> idx(k);
  for (int b = 0; b < k; ++b) idx[b] = stack.require_band(bands[b]);

  auto mask = stack.mask();

  // Per-strip compensated sums of x_i and x_i * x_j over valid pixels,
  // merged in strip order so the result never depends on thread count.
  const int nstrips = detail::strip_count(stack.height());
  const int npairs = k * (k + 1) / 2;
  std::vector<std::vector<CompensatedSum>> strip_sums(
      nstrips, std::vector<CompensatedSum>(k + npairs));
  std::vector<std::size_t> strip_counts(nstrips, 0);

  detail::parallel_strips(stack.height(), [&](int r0, int r1, int strip) {
    auto& acc = strip_sums[strip];
    std::size_t count = 0;
    std::size_t begin = std::size_t(r0) * stack.width();
    std::size_t end = std::size_t(r1) * stack.width();
    for (std::size_t i = begin; i < end; ++i) {
      if (!mask[i]) continue;
      ++count;
      double v[8];
      for (int b = 0; b < k; ++b) v[b] = stack.plane(idx[b])[i];
      for (int b = 0; b < k; ++b) acc[b].add(v[b]);
      int pair = 0;
      for (int b = 0; b < k; ++b) {
        for (int c = b; c < k; ++c, ++pair) acc[k + pair].add(v[b] * v[c]);
      }
    }
    strip_counts[strip] = count;
  });

  std::vector<CompensatedSum> total(k + npairs);
  std::size_t n_valid = 0;
  for (int s = 0; s < nstrips; ++s) {
    n_valid += strip_counts[s];
    for (int j = 0; j < k + npairs; ++j) total[j].merge(strip_sums[s][j]);
  }
  if (n_valid < static_cast<std::size_t>(std::max(k, 2))) {
    throw InsufficientData("pca needs at least " +
                           std::to_string(std::max(k, 2)) + " valid pixels, got " +
                           std::to_string(n_valid));
  }

  const double n = static_cast<double>(n_valid);
  std::vector<double> mean(k);
  for (int b = 0; b < k; ++b) mean[b] = total[b].value() / n;

  std::vector<double> cov(std::size_t(k) * k);
  {
    int pair = 0;
    for (int b = 0; b < k; ++b) {
      for (int c = b; c < k; ++c, ++pair) {
        double sxy = total[k + pair].value();
        double v = (sxy - n * mean[b] * mean[c]) / (n - 1.0);
        cov[std::size_t(b) * k + c] = v;
        cov[std::size_t(c) * k + b] = v;
      }
    }
  }

  std::vector<double> sd(k);
  for (int b = 0; b < k; ++b) {
    double var = cov[std::size_t(b) * k + b];
    sd[b] = var > 0.0 ? std::sqrt(var) : 0.0;
  }

  std::vector<double> matrix = cov;
  if (mode == PcaMode::correlation) {
    for (int b = 0; b < k; ++b) {
      if (sd[b] == 0.0) {
        throw DegenerateBand("band " + bands[b] +
                             " has zero variance; correlation is undefined");
      }
    }
    for (int b = 0; b < k; ++b) {
      for (int c = 0; c < k; ++c) {
        matrix[std::size_t(b) * k + c] = cov[std::size_t(b) * k + c] / (sd[b] * sd[c]);
      }
    }
  }

  double trace = 0.0;
  for (int b = 0; b < k; ++b) trace += matrix[std::size_t(b) * k + b];

  std::vector<double> work = matrix;
  std::vector<double> eigenvalues;
  std::vector<double> vectors;  // column j = eigenvector j
  jacobi_eigen(work, k, eigenvalues, vectors);

  std::vector<int> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a_, int b_) { return eigenvalues[a_] > eigenvalues[b_]; });

  PcaResult result;
  result.mode = mode;
  result.band_order = bands;
  result.band_means = mean;
  if (mode == PcaMode::correlation) result.band_sds = sd;

  result.eigenvalues.resize(k);
  result.eigenvectors.assign(k, std::vector<double>(k));
  for (int j = 0; j < k; ++j) {
    int src = order[j];
    result.eigenvalues[j] = eigenvalues[src];
    // sign convention: the largest-magnitude loading is positive
    int arg = 0;
    double best = -1.0;
    for (int i = 0; i < k; ++i) {
      double m = std::abs(vectors[std::size_t(i) * k + src]);
      if (m > best) {
        best = m;
        arg = i;
      }
    }
    double sign = vectors[std::size_t(arg) * k + src] < 0.0 ? -1.0 : 1.0;
    for (int i = 0; i < k; ++i) {
      result.eigenvectors[j][i] = sign * vectors[std::size_t(i) * k + src];
    }
  }

  result.explained_variance_ratio.resize(k);
  for (int j = 0; j < k; ++j) {
    result.explained_variance_ratio[j] = result.eigenvalues[j] / trace;
  }

  // Scores: centered (and standardized, in correlation mode) projections.
  std::vector<BandDescriptor> score_bands;
  for (int j = 0; j < k; ++j) score_bands.push_back(derived_band("PC" + std::to_string(j + 1)));
  RasterGrid scores(stack.width(), stack.height(), score_bands, stack.geo());
  std::copy(mask.begin(), mask.end(), scores.mask().begin());

  detail::parallel_strips(stack.height(), [&](int r0, int r1, int) {
    std::size_t begin = std::size_t(r0) * stack.width();
    std::size_t end = std::size_t(r1) * stack.width();
    for (std::size_t i = begin; i < end; ++i) {
      if (!mask[i]) continue;
      double centered[8];
      for (int b = 0; b < k; ++b) {
        double v = stack.plane(idx[b])[i] - mean[b];
        if (mode == PcaMode::correlation) v /= sd[b];
        centered[b] = v;
      }
      for (int j = 0; j < k; ++j) {
        double acc = 0.0;
        for (int b = 0; b < k; ++b) acc += result.eigenvectors[j][b] * centered[b];
        scores.plane(j)[i] = acc;
      }
    }
  });
  result.scores = std::move(scores);
  return result;
}

double explained_variance(const PcaResult& result, int n_components) {
  if (n_components < 1 ||
      n_components > static_cast<int>(result.explained_variance_ratio.size())) {
    throw InvalidArgument("component count outside [1, k]");
  }
  double s = 0.0;
  for (int i = 0; i < n_components; ++i) s += result.explained_variance_ratio[i];
  return s;
}

std::string pca_report_json(const PcaResult& result) {
  nlohmann::json j;
  j["mode"] = result.mode == PcaMode::correlation ? "correlation" : "covariance";
  j["band_order"] = result.band_order;
  j["eigenvalues"] = result.eigenvalues;
  j["eigenvectors"] = result.eigenvectors;
  j["explained_variance_ratio"] = result.explained_variance_ratio;
  j["band_means"] = result.band_means;
  if (!result.band_sds.empty()) j["band_sds"] = result.band_sds;
  return j.dump(2);
}

}  // namespace soilmark
