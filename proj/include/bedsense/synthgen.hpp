#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "bedsense/dataset.hpp"

namespace bedsense {

enum class Posture : int { kSupine = 1, kLeft = 2, kRight = 3 };

/// Anisotropic 2-D Gaussian in grid units. `amplitude` is the peak value.
struct Blob {
  double center_row = 0.0;
  double center_col = 0.0;
  double sigma_row = 1.0;
  double sigma_col = 1.0;
  double amplitude = 0.0;
};

/// Head, torso, pelvis, left leg, right leg.
struct BodyModel {
  SubjectRecord subject;
  std::array<Blob, 5> blobs;
};

struct NoiseSpec {
  double multiplicative_sigma = 0.0;
  double dropout_prob = 0.0;
  double jitter_sigma_cells = 0.0;

  static NoiseSpec none() { return {}; }
  /// The preset used by the synthetic end-to-end acceptance run.
  static NoiseSpec moderate() { return {0.10, 0.02, 0.5}; }
};

struct SynthConfig {
  int n_subjects = 8;
  int frames_per_subject = 200;
  std::vector<Posture> postures = {Posture::kSupine, Posture::kLeft, Posture::kRight};
  NoiseSpec noise;
  GridSpec grid = {64, 32, 1000.0, 1.5};
  std::uint64_t seed = 0;
};

/// Per-blob share of body weight: head, torso, pelvis, left leg, right leg.
inline constexpr std::array<double, 5> kBlobMassFractions = {0.08, 0.43, 0.33, 0.08, 0.08};

/// Readings below this are reported as zero (mat sensitivity floor).
inline constexpr double kSensorFloor = 1.0;

/// Supine body layout for one subject on a grid. The body's long axis runs
/// along rows; lateral placement is along columns.
BodyModel make_body_model(const SubjectRecord& subject, const GridSpec& grid,
                          std::uint64_t shape_seed);

/// Applies a posture: lateral shift by 0.15·cols for side postures and 30%
/// narrower transverse sigmas.
BodyModel apply_posture(const BodyModel& body, Posture posture, const GridSpec& grid);

/// Noise-free rendering with the sensor floor, integer quantization and
/// ceiling clip applied.
std::vector<double> render_body(const BodyModel& body, const GridSpec& grid,
                                double row_offset = 0.0, double col_offset = 0.0);

/// Draws subjects (heights 1.55-1.95 m, weights 45-110 kg) and renders
/// frames. Identical config produces a bit-identical corpus.
Corpus generate_corpus(const SynthConfig& config);

/// Same as above with caller-provided subjects. Body-shape variation is
/// seeded per subject position, so changing one subject's weight leaves the
/// other subjects' frames unchanged.
Corpus generate_corpus(const std::vector<SubjectRecord>& subjects, const SynthConfig& config);

}  // namespace bedsense
