#pragma once
// Brute-force reference for the twelve statistical and count features.
// Moments come from raw power sums in long double rather than centered
// two-pass sums, and the histogram is built by scanning bin edges.

#include <array>
#include <cmath>
#include <cstddef>
#include <vector>

namespace oracle {

struct Stats {
  double max = 0, mode = 0, range = 0, entropy = 0;
  double mean = 0, variance = 0, skewness = 0, kurtosis = 0;
  double nonzero = 0, c20_60 = 0, c60_100 = 0, c100 = 0;

  std::array<double, 12> as_array() const {
    return {max, mode, range, entropy, mean, variance, skewness, kurtosis, nonzero, c20_60, c60_100, c100};
  }
};

inline Stats brute_stats(const std::vector<double>& v, double ceiling) {
  Stats s;
  double lo = v[0], hi = v[0];
  for (double x : v) {
    if (x < lo) lo = x;
    if (x > hi) hi = x;
  }
  s.max = hi;
  s.range = hi - lo;

  // Mode: count every candidate against every cell.
  std::size_t best = 0;
  for (double x : v) {
    const double r = std::round(x);
    std::size_t c = 0;
    for (double y : v) c += std::round(y) == r;
    if (c > best || (c == best && r < s.mode)) {
      best = c;
      s.mode = r;
    }
  }

  std::vector<std::size_t> bins(256, 0);
  for (double x : v) {
    std::size_t b = 255;
    for (std::size_t i = 0; i < 256; ++i) {
      const double upper = static_cast<double>(i + 1) * ceiling;
      if (x * 256.0 < upper) {
        b = i;
        break;
      }
    }
    ++bins[b];
  }
  for (std::size_t c : bins) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / static_cast<double>(v.size());
    s.entropy += -p * std::log(p);
  }

  long double n = 0, p1 = 0, p2 = 0, p3 = 0, p4 = 0;
  for (double x : v) {
    if (x > 20 && x < 60) s.c20_60 += 1;
    if (x > 60 && x < 100) s.c60_100 += 1;
    if (x > 100) s.c100 += 1;
    if (x == 0) continue;
    const long double y = x;
    n += 1;
    p1 += y;
    p2 += y * y;
    p3 += y * y * y;
    p4 += y * y * y * y;
  }
  s.nonzero = static_cast<double>(n);
  if (n == 0) return s;
  const long double mu = p1 / n;
  const long double e2 = p2 / n, e3 = p3 / n, e4 = p4 / n;
  const long double m2 = e2 - mu * mu;
  const long double m3 = e3 - 3 * mu * e2 + 2 * mu * mu * mu;
  const long double m4 = e4 - 4 * mu * e3 + 6 * mu * mu * e2 - 3 * mu * mu * mu * mu;
  s.mean = static_cast<double>(mu);
  s.variance = static_cast<double>(m2);
  // Exact zero spread is detected directly, not through the cancelling sums.
  bool constant = true;
  for (double x : v) {
    if (x != 0 && x != static_cast<double>(mu)) constant = false;
  }
  if (constant) {
    s.variance = 0;
    return s;
  }
  s.skewness = static_cast<double>(m3 / std::pow(m2, 1.5L));
  s.kurtosis = static_cast<double>(m4 / (m2 * m2));
  return s;
}

}  // namespace oracle
