#pragma once

#include <span>
#include <vector>

#include "bedsense/dataset.hpp"

namespace bedsense {

struct PreprocessOptions {
  int median_window = 3;
  int gaussian_window = 5;
  double gaussian_sigma = 1.0;
  bool skip_filters = false;
};

/// Spatial median over a window×window neighborhood clipped to the grid.
/// Even-sized neighborhoods (at borders) take the mean of the two middle
/// order statistics. Throws DomainError for an even or non-positive window.
PressureFrame median_filter(const PressureFrame& frame, int window = 3);

/// Unit-sum sampled Gaussian with `window` taps centred on zero.
std::vector<double> gaussian_kernel(int window, double sigma);

/// Per-sensor temporal smoothing of one recording session. All frames must
/// share (subject_id, posture_id) and grid. Boundaries reflect about the
/// session ends (d c b a | a b c d | d c b a).
std::vector<PressureFrame> temporal_gaussian(std::span<const PressureFrame> session,
                                             int window = 5, double sigma = 1.0);

/// Median filter on every frame, then temporal smoothing within each
/// session. Sessions are maximal runs of one (subject_id, posture_id) with
/// consecutive frame indices.
Corpus preprocess_corpus(const Corpus& corpus, const PreprocessOptions& options = {});

}  // namespace bedsense
