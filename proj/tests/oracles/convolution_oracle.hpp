#pragma once
// Direct temporal convolution with a sampled Gaussian and half-sample
// symmetric reflection at both ends.

#include <cmath>
#include <vector>

namespace oracle {

inline std::vector<double> gaussian_taps(int window, double sigma) {
  std::vector<double> k;
  double total = 0;
  for (int i = -(window / 2); i <= window / 2; ++i) {
    k.push_back(std::exp(-0.5 * i * i / (sigma * sigma)));
    total += k.back();
  }
  for (double& w : k) w /= total;
  return k;
}

inline int reflect(int i, int n) {
  while (i < 0 || i >= n) i = i < 0 ? -i - 1 : 2 * n - i - 1;
  return i;
}

inline std::vector<double> smooth(const std::vector<double>& x, int window, double sigma) {
  const auto k = gaussian_taps(window, sigma);
  const int n = static_cast<int>(x.size());
  std::vector<double> out(x.size(), 0.0);
  for (int t = 0; t < n; ++t) {
    for (int j = 0; j < window; ++j) out[static_cast<std::size_t>(t)] += k[static_cast<std::size_t>(j)] * x[static_cast<std::size_t>(reflect(t + j - window / 2, n))];
  }
  return out;
}

}  // namespace oracle
