#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <set>

#include "bedsense/dataset.hpp"
#include "bedsense/error.hpp"
#include "bedsense/synthgen.hpp"
#include "test_util.hpp"

using namespace bedsense;
namespace fs = std::filesystem;

TEST_CASE("compute_bmi") {
  CHECK(compute_bmi(70.0, 1.75) == doctest::Approx(22.857142857142858).epsilon(1e-15));
  CHECK(compute_bmi(1.0, 1.0) == 1.0);
  CHECK(compute_bmi(94.3, 1.85) == doctest::Approx(94.3 / (1.85 * 1.85)).epsilon(1e-15));
  CHECK(compute_bmi(94.3, 1.85) == doctest::Approx(27.553).epsilon(1e-4));
  CHECK_THROWS_AS(compute_bmi(0.0, 1.7), DomainError);
  CHECK_THROWS_AS(compute_bmi(70.0, -1.0), DomainError);
}

TEST_CASE("compute_bmi is monotone in weight and height") {
  for (double w = 40; w < 120; w += 5) CHECK(compute_bmi(w + 1, 1.7) > compute_bmi(w, 1.7));
  for (double h = 1.4; h < 2.1; h += 0.05) CHECK(compute_bmi(70, h + 0.01) < compute_bmi(70, h));
}

TEST_CASE("make_subject enforces the BMI band") {
  CHECK_THROWS_AS(make_subject("X", 1.0, 70.0), DomainError);  // BMI 70
  CHECK_THROWS_AS(make_subject("a,b", 1.7, 70.0), DomainError);
  CHECK(make_subject("X", 1.7, 70.0).bmi == doctest::Approx(70.0 / 2.89));
}

TEST_CASE("save and load round-trip bit-exactly") {
  const auto dir = testutil::scratch("roundtrip");
  const Corpus c = testutil::tiny_corpus();
  save_corpus(c, dir);
  const Corpus back = load_corpus(dir);
  CHECK(back == c);
  CHECK(back.frames.front().subject_id == "A");
  CHECK(corpus_checksum(back) == corpus_checksum(c));
}

TEST_CASE("empty frame sequence is a valid corpus") {
  const auto dir = testutil::scratch("empty");
  Corpus c = testutil::tiny_corpus();
  c.frames.clear();
  save_corpus(c, dir);
  CHECK(load_corpus(dir).frames.empty());
}

TEST_CASE("synthetic corpus round-trips with identical checksum") {
  SynthConfig cfg;
  cfg.frames_per_subject = 6;
  cfg.noise = NoiseSpec::moderate();
  cfg.seed = 11;
  const Corpus c = generate_corpus(cfg);
  const auto dir = testutil::scratch("synth_rt");
  save_corpus(c, dir);
  const Corpus back = load_corpus(dir);
  CHECK(back.subjects.size() == 8);
  CHECK(corpus_checksum(back) == corpus_checksum(c));
  CHECK(back == c);
}

namespace {

void rewrite(const fs::path& file, const std::string& from, const std::string& to) {
  std::ifstream in(file);
  std::string text((std::istreambuf_iterator<char>(in)), {});
  in.close();
  const auto pos = text.find(from);
  REQUIRE(pos != std::string::npos);
  text.replace(pos, from.size(), to);
  std::ofstream(file) << text;
}

}  // namespace

TEST_CASE("load errors name file and line") {
  const auto dir = testutil::scratch("errors");
  save_corpus(testutil::tiny_corpus(), dir);

  SUBCASE("unknown subject") {
    rewrite(dir / "frames.csv", "\nB,", "\nZ,");
    try {
      load_corpus(dir);
      FAIL("expected LoadError");
    } catch (const LoadError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("frames.csv:5") != std::string::npos);
      CHECK(msg.find("unknown subject_id") != std::string::npos);
    }
  }
  SUBCASE("value above ceiling") {
    rewrite(dir / "frames.csv", ",100,", ",101,");
    try {
      load_corpus(dir);
      FAIL("expected LoadError");
    } catch (const LoadError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("frames.csv:2") != std::string::npos);
      CHECK(msg.find("101") != std::string::npos);
    }
  }
  SUBCASE("missing file") {
    fs::remove(dir / "subjects.csv");
    CHECK_THROWS_WITH_AS(load_corpus(dir), doctest::Contains("subjects.csv"), LoadError);
  }
  SUBCASE("malformed row") {
    rewrite(dir / "subjects.csv", "1.7,", "tall,");
    CHECK_THROWS_WITH_AS(load_corpus(dir), doctest::Contains("subjects.csv:2"), LoadError);
  }
}

TEST_CASE("feature mask needs at least twelve features") {
  Corpus c = testutil::tiny_corpus();
  c.feature_mask.reset(0).reset(2).reset(3);
  CHECK_THROWS_AS(c.validate(), DomainError);
}

TEST_CASE("merge_postures") {
  std::set<int> groups;
  for (int raw = 1; raw <= 17; ++raw) {
    const int g = merge_postures(raw);
    CHECK(g >= 1);
    CHECK(g <= 10);
    groups.insert(g);
  }
  CHECK(groups.size() == 10);
  // Base postures map to distinct groups.
  std::set<int> base;
  for (int raw : {1, 2, 3, 8, 9, 10, 11, 12, 13, 14}) base.insert(merge_postures(raw));
  CHECK(base.size() == 10);
  // Wedged supine and side recordings join their flat analogs.
  CHECK(merge_postures(15) == merge_postures(1));
  CHECK(merge_postures(16) == merge_postures(1));
  CHECK(merge_postures(17) == merge_postures(1));
  CHECK(merge_postures(4) == merge_postures(2));
  CHECK(merge_postures(5) == merge_postures(2));
  CHECK(merge_postures(6) == merge_postures(3));
  CHECK(merge_postures(7) == merge_postures(3));
  CHECK_THROWS_AS(merge_postures(0), DomainError);
  CHECK_THROWS_AS(merge_postures(18), DomainError);
}

TEST_CASE("posture map loads from an editable file") {
  const auto dir = testutil::scratch("posture");
  std::ofstream(dir / "map.csv") << "raw_id,group_id\n# comment\n1,1\n2,1\n3,2\n";
  const PostureMap m = PostureMap::load(dir / "map.csv");
  CHECK(m.group_of(2) == 1);
  CHECK(m.group_count() == 2);
  CHECK_THROWS_AS(m.group_of(4), DomainError);
}
