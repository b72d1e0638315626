#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "smpp/common.hpp"

namespace smpp {

inline double mean(std::span<const double> x) {
  if (x.empty()) throw numeric_error("mean: empty sample");
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

inline double sample_variance(std::span<const double> x) {
  if (x.size() < 2) throw numeric_error("sample_variance: need at least two points");
  const double m = mean(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s / static_cast<double>(x.size() - 1);
}

// Linear-interpolation quantile of an unsorted sample (the common
// "type 7" definition: h = (n-1)p).
inline double quantile(std::span<const double> x, double p) {
  if (x.empty()) throw numeric_error("quantile: empty sample");
  if (p < 0.0 || p > 1.0) throw numeric_error("quantile: p outside [0,1]");
  std::vector<double> s(x.begin(), x.end());
  std::sort(s.begin(), s.end());
  const double h = (static_cast<double>(s.size()) - 1.0) * p;
  const std::size_t lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, s.size() - 1);
  return s[lo] + (h - static_cast<double>(lo)) * (s[hi] - s[lo]);
}

// Sample autocorrelation at the given lag (denominator n, overall mean).
inline double autocorrelation(std::span<const double> x, std::size_t lag) {
  if (x.size() <= lag + 1) throw numeric_error("autocorrelation: series too short for lag");
  const double m = mean(x);
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    den += (x[i] - m) * (x[i] - m);
    if (i + lag < x.size()) num += (x[i] - m) * (x[i + lag] - m);
  }
  if (den == 0.0) throw numeric_error("autocorrelation: zero variance");
  return num / den;
}

namespace detail {

inline void mat_multiply(const std::vector<double>& a, const std::vector<double>& b,
                         std::vector<double>& c, int m) {
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) {
      double s = 0.0;
      for (int k = 0; k < m; ++k) s += a[i * m + k] * b[k * m + j];
      c[i * m + j] = s;
    }
  }
}

inline void mat_power(const std::vector<double>& a, int ea, std::vector<double>& v, int& ev,
                      int m, int n) {
  if (n == 1) {
    v = a;
    ev = ea;
    return;
  }
  mat_power(a, ea, v, ev, m, n / 2);
  std::vector<double> b(static_cast<std::size_t>(m) * m);
  mat_multiply(v, v, b, m);
  int eb = 2 * ev;
  if (n % 2 == 0) {
    v = b;
    ev = eb;
  } else {
    mat_multiply(a, b, v, m);
    ev = ea + eb;
  }
  if (v[(m / 2) * m + (m / 2)] > 1e140) {
    for (double& x : v) x *= 1e-140;
    ev += 140;
  }
}

// Marsaglia-Tsang-Wang matrix evaluation of the exact finite-sample
// one-sample Kolmogorov-Smirnov cdf P(D_n < d).
inline double ks_cdf_exact(int n, double d) {
  double s = d * d * n;
  if (s > 7.24 || (s > 3.76 && n > 99)) {
    return 1.0 - 2.0 * std::exp(-(2.000071 + 0.331 / std::sqrt(static_cast<double>(n)) +
                                  1.409 / static_cast<double>(n)) *
                                s);
  }
  const int k = static_cast<int>(n * d) + 1;
  const int m = 2 * k - 1;
  const double h = k - n * d;
  std::vector<double> H(static_cast<std::size_t>(m) * m);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) H[i * m + j] = (i - j + 1 < 0) ? 0.0 : 1.0;
  }
  for (int i = 0; i < m; ++i) {
    H[i * m] -= std::pow(h, i + 1);
    H[(m - 1) * m + i] -= std::pow(h, m - i);
  }
  H[(m - 1) * m] += (2.0 * h - 1.0 > 0.0) ? std::pow(2.0 * h - 1.0, m) : 0.0;
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) {
      if (i - j + 1 > 0) {
        for (int g = 1; g <= i - j + 1; ++g) H[i * m + j] /= g;
      }
    }
  }
  std::vector<double> Q;
  int eQ = 0;
  mat_power(H, 0, Q, eQ, m, n);
  s = Q[(k - 1) * m + (k - 1)];
  for (int i = 1; i <= n; ++i) {
    s = s * i / n;
    if (s < 1e-140) {
      s *= 1e140;
      eQ -= 140;
    }
  }
  return s * std::pow(10.0, eQ);
}

// Kolmogorov limiting survival function Q(t) = 2 sum (-1)^{j-1} exp(-2 j^2 t^2).
inline double kolmogorov_sf(double t) {
  if (t < 1e-3) return 1.0;
  double s = 0.0;
  for (int j = 1; j <= 200; ++j) {
    const double term = std::exp(-2.0 * j * j * t * t);
    s += (j % 2 == 1) ? term : -term;
    if (term < 1e-16) break;
  }
  return std::clamp(2.0 * s, 0.0, 1.0);
}

}  // namespace detail

// One-sample KS statistic against the U(0,1) null.
inline double ks_statistic_uniform(std::span<const double> u) {
  if (u.empty()) throw numeric_error("ks_statistic_uniform: empty sample");
  std::vector<double> s(u.begin(), u.end());
  std::sort(s.begin(), s.end());
  const double n = static_cast<double>(s.size());
  double d = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double up = (static_cast<double>(i) + 1.0) / n - s[i];
    const double lo = s[i] - static_cast<double>(i) / n;
    d = std::max({d, up, lo});
  }
  return d;
}

// Two-sided p-value: exact finite-sample for n < 50, else the asymptotic
// distribution at the small-sample-corrected argument
// d (sqrt(n) + 0.12 + 0.11/sqrt(n)).
inline double ks_pvalue(double d, std::size_t n) {
  if (n == 0) throw numeric_error("ks_pvalue: empty sample");
  if (d <= 0.0) return 1.0;
  if (d >= 1.0) return 0.0;
  if (n < 50) return 1.0 - detail::ks_cdf_exact(static_cast<int>(n), d);
  const double sn = std::sqrt(static_cast<double>(n));
  return detail::kolmogorov_sf(d * (sn + 0.12 + 0.11 / sn));
}

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
  std::size_t n = 0;
};

inline KsResult ks_test_uniform(std::span<const double> u) {
  KsResult r;
  r.n = u.size();
  r.statistic = ks_statistic_uniform(u);
  r.p_value = ks_pvalue(r.statistic, r.n);
  return r;
}

}  // namespace smpp
