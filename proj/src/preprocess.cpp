#include "bedsense/preprocess.hpp"

#include <algorithm>
#include <cmath>

#include "bedsense/error.hpp"

namespace bedsense {

PressureFrame median_filter(const PressureFrame& frame, int window) {
  if (window <= 0 || window % 2 == 0) {
    throw DomainError("median_filter: window must be odd and positive");
  }
  const int rows = frame.grid.rows;
  const int cols = frame.grid.cols;
  const int half = window / 2;
  PressureFrame out = frame;
  std::vector<double> neighborhood;
  neighborhood.reserve(static_cast<std::size_t>(window) * window);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      neighborhood.clear();
      for (int rr = std::max(0, r - half); rr <= std::min(rows - 1, r + half); ++rr) {
        for (int cc = std::max(0, c - half); cc <= std::min(cols - 1, c + half); ++cc) {
          neighborhood.push_back(frame.at(rr, cc));
        }
      }
      const std::size_t n = neighborhood.size();
      const auto upper = neighborhood.begin() + static_cast<std::ptrdiff_t>(n / 2);
      std::nth_element(neighborhood.begin(), upper, neighborhood.end());
      double median = *upper;
      if (n % 2 == 0) {
        const double lower = *std::max_element(neighborhood.begin(), upper);
        median = 0.5 * (lower + median);
      }
      out.values[static_cast<std::size_t>(r) * cols + c] = median;
    }
  }
  return out;
}

std::vector<double> gaussian_kernel(int window, double sigma) {
  if (window <= 0 || window % 2 == 0) {
    throw DomainError("gaussian_kernel: window must be odd and positive");
  }
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw DomainError("gaussian_kernel: sigma must be positive");
  }
  const int half = window / 2;
  std::vector<double> kernel(static_cast<std::size_t>(window));
  double total = 0.0;
  for (int k = -half; k <= half; ++k) {
    const double w = std::exp(-0.5 * (k * k) / (sigma * sigma));
    kernel[static_cast<std::size_t>(k + half)] = w;
    total += w;
  }
  for (double& w : kernel) w /= total;
  return kernel;
}

namespace {

// Symmetric reflection including the edge sample, periodic with 2n.
std::size_t reflect_index(long long i, long long n) {
  const long long period = 2 * n;
  long long m = i % period;
  if (m < 0) m += period;
  return static_cast<std::size_t>(m < n ? m : period - 1 - m);
}

}  // namespace

std::vector<PressureFrame> temporal_gaussian(std::span<const PressureFrame> session, int window,
                                             double sigma) {
  if (session.empty()) throw DomainError("temporal_gaussian: empty session");
  const auto kernel = gaussian_kernel(window, sigma);
  const PressureFrame& first = session.front();
  for (const auto& f : session) {
    if (f.subject_id != first.subject_id || f.posture_id != first.posture_id) {
      throw DomainError("temporal_gaussian: frames from different sessions");
    }
    if (!(f.grid == first.grid) || f.values.size() != first.values.size()) {
      throw DomainError("temporal_gaussian: frames have different grids");
    }
  }
  const long long n = static_cast<long long>(session.size());
  const int half = window / 2;
  std::vector<PressureFrame> out(session.begin(), session.end());
  const std::size_t cells = first.values.size();
  std::vector<double> lo(cells), hi(cells);
  for (long long t = 0; t < n; ++t) {
    auto& dst = out[static_cast<std::size_t>(t)].values;
    std::fill(dst.begin(), dst.end(), 0.0);
    std::fill(lo.begin(), lo.end(), INFINITY);
    std::fill(hi.begin(), hi.end(), -INFINITY);
    for (int k = -half; k <= half; ++k) {
      const double w = kernel[static_cast<std::size_t>(k + half)];
      const auto& src = session[reflect_index(t + k, n)].values;
      for (std::size_t i = 0; i < cells; ++i) {
        dst[i] += w * src[i];
        lo[i] = std::min(lo[i], src[i]);
        hi[i] = std::max(hi[i], src[i]);
      }
    }
    // A convex combination stays within its inputs; clamp away rounding.
    for (std::size_t i = 0; i < cells; ++i) dst[i] = std::clamp(dst[i], lo[i], hi[i]);
  }
  return out;
}

Corpus preprocess_corpus(const Corpus& corpus, const PreprocessOptions& options) {
  Corpus out = corpus;
  if (options.skip_filters) return out;
  // Validate knobs up front so an empty corpus still rejects bad options.
  gaussian_kernel(options.gaussian_window, options.gaussian_sigma);
  if (options.median_window <= 0 || options.median_window % 2 == 0) {
    throw DomainError("median_filter: window must be odd and positive");
  }
  for (auto& f : out.frames) f = median_filter(f, options.median_window);

  std::size_t begin = 0;
  while (begin < out.frames.size()) {
    std::size_t end = begin + 1;
    while (end < out.frames.size() && out.frames[end].subject_id == out.frames[begin].subject_id &&
           out.frames[end].posture_id == out.frames[begin].posture_id &&
           out.frames[end].frame_index == out.frames[end - 1].frame_index + 1) {
      ++end;
    }
    const std::span<const PressureFrame> session(out.frames.data() + begin, end - begin);
    auto smoothed = temporal_gaussian(session, options.gaussian_window, options.gaussian_sigma);
    std::move(smoothed.begin(), smoothed.end(), out.frames.begin() + static_cast<std::ptrdiff_t>(begin));
    begin = end;
  }
  return out;
}

}  // namespace bedsense
