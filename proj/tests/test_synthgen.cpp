#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <numeric>

#include "bedsense/error.hpp"
#include "bedsense/synthgen.hpp"

using namespace bedsense;

namespace {

SynthConfig quiet(int frames, std::vector<Posture> postures = {Posture::kSupine}) {
  SynthConfig c;
  c.n_subjects = 2;
  c.frames_per_subject = frames;
  c.postures = std::move(postures);
  c.noise = NoiseSpec::none();
  c.grid = {64, 32, 1000.0, 1.5};
  c.seed = 7;
  return c;
}

double frame_sum(const PressureFrame& f) { return std::accumulate(f.values.begin(), f.values.end(), 0.0); }

}  // namespace

TEST_CASE("identical seeds give identical corpora") {
  const Corpus a = generate_corpus(quiet(1));
  const Corpus b = generate_corpus(quiet(1));
  CHECK(a == b);
  SynthConfig noisy = quiet(5, {Posture::kSupine, Posture::kLeft, Posture::kRight});
  noisy.noise = NoiseSpec::moderate();
  CHECK(generate_corpus(noisy) == generate_corpus(noisy));
  SynthConfig other = noisy;
  other.seed = 8;
  CHECK_FALSE(generate_corpus(noisy) == generate_corpus(other));
}

TEST_CASE("subjects fall inside the anthropometric ranges") {
  SynthConfig c = quiet(1);
  c.n_subjects = 40;
  const Corpus corpus = generate_corpus(c);
  REQUIRE(corpus.subjects.size() == 40);
  for (const auto& s : corpus.subjects) {
    CHECK(s.height_m >= 1.55);
    CHECK(s.height_m <= 1.95);
    CHECK(s.weight_kg >= 45);
    CHECK(s.weight_kg <= 110);
    CHECK(s.bmi == doctest::Approx(compute_bmi(s.weight_kg, s.height_m)));
  }
}

TEST_CASE("doubling one subject's weight raises its frame sum") {
  const SynthConfig c = quiet(1);
  std::vector<SubjectRecord> subjects = {make_subject("P", 1.80, 50.0), make_subject("Q", 1.70, 70.0)};
  const Corpus light = generate_corpus(subjects, c);
  subjects[0] = make_subject("P", 1.80, 100.0);
  const Corpus heavy = generate_corpus(subjects, c);
  CHECK(frame_sum(heavy.frames[0]) > frame_sum(light.frames[0]));
  CHECK(heavy.frames[1] == light.frames[1]);
}

TEST_CASE("frame sum strictly increases with weight") {
  const SynthConfig c = quiet(1);
  double previous = -1;
  for (double w = 50; w <= 110; w += 5) {
    const Corpus corpus = generate_corpus({make_subject("P", 1.80, w), make_subject("Q", 1.70, 70.0)}, c);
    const double s = frame_sum(corpus.frames[0]);
    CHECK(s > previous);
    previous = s;
  }
}

TEST_CASE("footprint area strictly increases with BMI at fixed height") {
  const SynthConfig c = quiet(1);
  long long previous = -1;
  for (double bmi = 16; bmi <= 36; bmi += 4) {
    const double w = bmi * 1.75 * 1.75;
    const Corpus corpus = generate_corpus({make_subject("P", 1.75, w), make_subject("Q", 1.70, 70.0)}, c);
    const auto& v = corpus.frames[0].values;
    const long long area = std::count_if(v.begin(), v.end(), [](double x) { return x > 0; });
    CHECK(area > previous);
    previous = area;
  }
}

TEST_CASE("body model invariants") {
  const GridSpec g{64, 32, 1000.0, 1.5};
  const SubjectRecord s = make_subject("P", 1.75, 70.0);
  const BodyModel m = make_body_model(s, g, 3);
  double total = 0;
  for (const auto& b : m.blobs) {
    CHECK(b.center_row >= 0);
    CHECK(b.center_row <= g.rows - 1);
    CHECK(b.center_col >= 0);
    CHECK(b.center_col <= g.cols - 1);
    CHECK(b.amplitude >= 0);
    total += b.amplitude;
  }
  const BodyModel heavy = make_body_model(make_subject("P", 1.75, 105.0), g, 3);
  double heavy_total = 0;
  for (const auto& b : heavy.blobs) heavy_total += b.amplitude;
  CHECK(heavy_total / total == doctest::Approx(1.5));

  const BodyModel tall = make_body_model(make_subject("P", 1.90, 70.0), g, 3);
  const double span = m.blobs[3].center_row - m.blobs[0].center_row;
  const double tall_span = tall.blobs[3].center_row - tall.blobs[0].center_row;
  CHECK(tall_span / span == doctest::Approx(1.90 / 1.75));

  const BodyModel left = apply_posture(m, Posture::kLeft, g);
  CHECK(left.blobs[1].center_col == doctest::Approx(m.blobs[1].center_col - 0.15 * g.cols));
  CHECK(left.blobs[1].sigma_col == doctest::Approx(0.7 * m.blobs[1].sigma_col));
  const BodyModel right = apply_posture(m, Posture::kRight, g);
  CHECK(right.blobs[1].center_col == doctest::Approx(m.blobs[1].center_col + 0.15 * g.cols));
}

TEST_CASE("readings stay in range and full dropout zeroes frames") {
  SynthConfig c = quiet(4, {Posture::kSupine, Posture::kLeft});
  c.noise = {0.3, 0.1, 1.0};
  for (const auto& f : generate_corpus(c).frames) {
    for (double v : f.values) {
      CHECK(v >= 0);
      CHECK(v <= c.grid.sensor_ceiling);
    }
  }
  c.noise = {0.0, 1.0, 0.0};
  for (const auto& f : generate_corpus(c).frames) {
    CHECK(frame_sum(f) == 0.0);
  }
}

TEST_CASE("frames are split into posture sessions") {
  const Corpus corpus = generate_corpus(quiet(9, {Posture::kSupine, Posture::kLeft, Posture::kRight}));
  CHECK(corpus.frames.size() == 18);
  int supine = 0;
  for (const auto& f : corpus.frames) supine += f.posture_id == 1;
  CHECK(supine == 6);
}

TEST_CASE("configuration errors") {
  SynthConfig c = quiet(1);
  c.postures.clear();
  CHECK_THROWS_AS(generate_corpus(c), DomainError);
  c = quiet(1);
  c.n_subjects = 1;
  CHECK_THROWS_AS(generate_corpus(c), DomainError);
  c = quiet(0);
  CHECK_THROWS_AS(generate_corpus(c), DomainError);
  c = quiet(1);
  c.noise.dropout_prob = 1.5;
  CHECK_THROWS_AS(generate_corpus(c), DomainError);
}
