#pragma once

// Brute-force eigenvalue oracle for small symmetric matrices, independent of
// the library's Jacobi path: characteristic polynomial coefficients via
// Faddeev-LeVerrier, roots via sign-change scanning plus bisection inside the
// Gershgorin interval.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace eigen_oracle {

// det(lambda I - A) = lambda^n + c[n-1] lambda^(n-1) + ... + c[0]
inline std::vector<double> characteristic_polynomial(
    const std::vector<double>& a, int n) {
  auto mul = [&](const std::vector<double>& x, const std::vector<double>& y) {
    std::vector<double> z(std::size_t(n) * n, 0.0);
    for (int i = 0; i < n; ++i) {
      for (int k = 0; k < n; ++k) {
        double xv = x[std::size_t(i) * n + k];
        if (xv == 0.0) continue;
        for (int j = 0; j < n; ++j) {
          z[std::size_t(i) * n + j] += xv * y[std::size_t(k) * n + j];
        }
      }
    }
    return z;
  };
  auto trace = [&](const std::vector<double>& x) {
    double t = 0.0;
    for (int i = 0; i < n; ++i) t += x[std::size_t(i) * n + i];
    return t;
  };

  std::vector<double> coeff(n + 1, 0.0);
  coeff[n] = 1.0;
  std::vector<double> m(std::size_t(n) * n, 0.0);
  for (int i = 0; i < n; ++i) m[std::size_t(i) * n + i] = 1.0;  // M1 = I

  double c = -trace(mul(a, m));  // c_{n-1}
  coeff[n - 1] = c;
  for (int k = 2; k <= n; ++k) {
    std::vector<double> am = mul(a, m);
    for (int i = 0; i < n; ++i) am[std::size_t(i) * n + i] += c;
    m = am;
    c = -trace(mul(a, m)) / k;
    coeff[n - k] = c;
  }
  return coeff;
}

inline double eval_poly(const std::vector<double>& coeff, double x) {
  double v = 0.0;
  for (int i = static_cast<int>(coeff.size()) - 1; i >= 0; --i) {
    v = v * x + coeff[i];
  }
  return v;
}

// All n real roots (symmetric input assumed), descending. Throws when the
// scan cannot isolate n sign changes (e.g. nearly multiple roots).
inline std::vector<double> symmetric_eigenvalues(const std::vector<double>& a,
                                                 int n, int samples = 200000) {
  std::vector<double> coeff = characteristic_polynomial(a, n);

  double lo = 0.0, hi = 0.0;
  for (int i = 0; i < n; ++i) {
    double center = a[std::size_t(i) * n + i];
    double radius = 0.0;
    for (int j = 0; j < n; ++j) {
      if (j != i) radius += std::abs(a[std::size_t(i) * n + j]);
    }
    lo = std::min(lo, center - radius);
    hi = std::max(hi, center + radius);
  }
  double pad = std::max(1e-9, (hi - lo) * 1e-9);
  lo -= pad;
  hi += pad;

  std::vector<double> roots;
  double step = (hi - lo) / samples;
  double x0 = lo;
  double f0 = eval_poly(coeff, x0);
  for (int s = 1; s <= samples && static_cast<int>(roots.size()) < n; ++s) {
    double x1 = lo + s * step;
    double f1 = eval_poly(coeff, x1);
    if (f0 == 0.0) {
      roots.push_back(x0);
    } else if (f0 * f1 < 0.0) {
      double a0 = x0, b0 = x1, fa = f0;
      for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (a0 + b0);
        double fm = eval_poly(coeff, mid);
        if (fm == 0.0) {
          a0 = b0 = mid;
          break;
        }
        if (fa * fm < 0.0) {
          b0 = mid;
        } else {
          a0 = mid;
          fa = fm;
        }
      }
      roots.push_back(0.5 * (a0 + b0));
    }
    x0 = x1;
    f0 = f1;
  }
  if (static_cast<int>(roots.size()) != n) {
    throw std::runtime_error("oracle could not isolate all eigenvalues");
  }
  std::sort(roots.begin(), roots.end(), std::greater<>());
  return roots;
}

}  // namespace eigen_oracle
