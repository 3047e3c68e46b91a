#include "bedsense/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "bedsense/error.hpp"
#include "bedsense/rng.hpp"

namespace bedsense {

namespace {

constexpr double kMaxHeightM = 1.95;
constexpr double kBodyFill = 0.88;     // fraction of rows covered by the tallest body
constexpr double kPeakGain = 6.0;      // sensor units per kg of blob mass share
constexpr double kReferenceBmi = 22.0;
constexpr double kSideShiftFraction = 0.15;
constexpr double kSideSigmaScale = 0.7;

// Stream ids for Rng::derive.
constexpr std::uint64_t kSubjectStream = 0x5B;
constexpr std::uint64_t kShapeStreamBase = 0x1000;
constexpr std::uint64_t kFrameStreamBase = 0x2000;

std::string subject_name(int index, int total) {
  const std::size_t width = std::to_string(total).size();
  std::string digits = std::to_string(index + 1);
  return "S" + std::string(width > digits.size() ? width - digits.size() : 0, '0') + digits;
}

}  // namespace

BodyModel make_body_model(const SubjectRecord& subject, const GridSpec& grid,
                          std::uint64_t shape_seed) {
  grid.validate();
  Rng rng(shape_seed);
  const double width_factor = rng.uniform(0.90, 1.10);
  const double leg_spread = rng.uniform(0.80, 1.25);
  const double torso_shift = rng.uniform(-0.03, 0.03);
  std::array<double, 5> amp_factor{};
  for (double& a : amp_factor) a = rng.uniform(0.90, 1.10);

  const double cells_per_m = kBodyFill * grid.rows / kMaxHeightM;
  const double length = subject.height_m * cells_per_m;
  const double top = 0.5 * (grid.rows - length);
  const double mid_col = 0.5 * (grid.cols - 1);
  const double girth = std::sqrt(subject.bmi / kReferenceBmi) * width_factor;

  BodyModel body;
  body.subject = subject;
  auto& [head, torso, pelvis, left_leg, right_leg] = body.blobs;
  head = {top + 0.065 * length, mid_col, 0.045 * length, 0.040 * length, 0.0};
  torso = {top + (0.30 + torso_shift) * length, mid_col, 0.10 * length, 0.075 * length * girth, 0.0};
  pelvis = {top + 0.50 * length, mid_col, 0.06 * length, 0.070 * length * girth, 0.0};
  const double leg_offset = 0.045 * length * leg_spread;
  left_leg = {top + 0.76 * length, mid_col - leg_offset, 0.13 * length, 0.030 * length * girth, 0.0};
  right_leg = {top + 0.76 * length, mid_col + leg_offset, 0.13 * length, 0.030 * length * girth, 0.0};

  for (std::size_t i = 0; i < body.blobs.size(); ++i) {
    Blob& b = body.blobs[i];
    b.amplitude = subject.weight_kg * kBlobMassFractions[i] * kPeakGain * amp_factor[i];
    b.center_row = std::clamp(b.center_row, 0.0, grid.rows - 1.0);
    b.center_col = std::clamp(b.center_col, 0.0, grid.cols - 1.0);
  }
  return body;
}

BodyModel apply_posture(const BodyModel& body, Posture posture, const GridSpec& grid) {
  if (posture == Posture::kSupine) return body;
  BodyModel out = body;
  const double shift = kSideShiftFraction * grid.cols * (posture == Posture::kLeft ? -1.0 : 1.0);
  for (Blob& b : out.blobs) {
    b.center_col = std::clamp(b.center_col + shift, 0.0, grid.cols - 1.0);
    b.sigma_col *= kSideSigmaScale;
  }
  return out;
}

std::vector<double> render_body(const BodyModel& body, const GridSpec& grid, double row_offset,
                                double col_offset) {
  std::vector<double> values(grid.cell_count(), 0.0);
  for (int r = 0; r < grid.rows; ++r) {
    for (int c = 0; c < grid.cols; ++c) {
      double v = 0.0;
      for (const Blob& b : body.blobs) {
        const double dr = (r - b.center_row - row_offset) / b.sigma_row;
        const double dc = (c - b.center_col - col_offset) / b.sigma_col;
        v += b.amplitude * std::exp(-0.5 * (dr * dr + dc * dc));
      }
      if (v < kSensorFloor) v = 0.0;
      values[static_cast<std::size_t>(r) * grid.cols + c] =
          std::min(std::round(v), grid.sensor_ceiling);
    }
  }
  return values;
}

Corpus generate_corpus(const std::vector<SubjectRecord>& subjects, const SynthConfig& config) {
  config.grid.validate();
  if (subjects.size() < 2) throw DomainError("generate_corpus: need at least 2 subjects");
  if (config.frames_per_subject < 1) throw DomainError("generate_corpus: frames_per_subject must be >= 1");
  if (config.postures.empty()) throw DomainError("generate_corpus: posture set is empty");
  for (std::size_t i = 0; i < config.postures.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (config.postures[i] == config.postures[j]) throw DomainError("generate_corpus: duplicate posture");
    }
  }
  const NoiseSpec& noise = config.noise;
  if (!std::isfinite(noise.multiplicative_sigma) || noise.multiplicative_sigma < 0.0 ||
      !std::isfinite(noise.jitter_sigma_cells) || noise.jitter_sigma_cells < 0.0 ||
      !(noise.dropout_prob >= 0.0 && noise.dropout_prob <= 1.0)) {
    throw DomainError("generate_corpus: invalid noise specification");
  }

  Corpus corpus;
  corpus.name = "synthetic";
  corpus.grid = config.grid;
  corpus.subjects = subjects;

  const std::size_t n_postures = config.postures.size();
  for (std::size_t s = 0; s < subjects.size(); ++s) {
    const BodyModel base =
        make_body_model(subjects[s], config.grid, Rng::derive(config.seed, kShapeStreamBase + s));
    Rng rng(Rng::derive(config.seed, kFrameStreamBase + s));
    for (std::size_t p = 0; p < n_postures; ++p) {
      // Contiguous session per posture; the first sessions absorb the remainder.
      const int count = config.frames_per_subject / static_cast<int>(n_postures) +
                        (static_cast<int>(p) < config.frames_per_subject % static_cast<int>(n_postures));
      const BodyModel body = apply_posture(base, config.postures[p], config.grid);
      for (int k = 0; k < count; ++k) {
        const double dr = noise.jitter_sigma_cells > 0 ? rng.normal(0.0, noise.jitter_sigma_cells) : 0.0;
        const double dc = noise.jitter_sigma_cells > 0 ? rng.normal(0.0, noise.jitter_sigma_cells) : 0.0;
        PressureFrame frame;
        frame.grid = config.grid;
        frame.subject_id = subjects[s].subject_id;
        frame.posture_id = static_cast<int>(config.postures[p]);
        frame.frame_index = k;
        frame.values = render_body(body, config.grid, dr, dc);
        for (double& v : frame.values) {
          if (noise.multiplicative_sigma > 0.0) {
            v *= std::max(0.0, 1.0 + rng.normal(0.0, noise.multiplicative_sigma));
          }
          if (noise.dropout_prob > 0.0 && rng.bernoulli(noise.dropout_prob)) v = 0.0;
          v = std::clamp(std::round(v), 0.0, config.grid.sensor_ceiling);
        }
        corpus.frames.push_back(std::move(frame));
      }
    }
  }
  corpus.canonicalize();
  return corpus;
}

Corpus generate_corpus(const SynthConfig& config) {
  if (config.n_subjects < 2) throw DomainError("generate_corpus: need at least 2 subjects");
  if (config.postures.empty()) throw DomainError("generate_corpus: posture set is empty");
  Rng rng(Rng::derive(config.seed, kSubjectStream));
  std::vector<SubjectRecord> subjects;
  for (int i = 0; i < config.n_subjects; ++i) {
    const double height = rng.uniform(1.55, 1.95);
    const double weight = rng.uniform(45.0, 110.0);
    const double age = std::round(rng.uniform(19.0, 60.0));
    subjects.push_back(make_subject(subject_name(i, config.n_subjects), height, weight, age));
  }
  return generate_corpus(subjects, config);
}

}  // namespace bedsense
