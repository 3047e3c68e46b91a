#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>

#include "bedsense/error.hpp"
#include "bedsense/ingest.hpp"
#include "test_util.hpp"

using namespace bedsense;
namespace fs = std::filesystem;

namespace {

void write(const fs::path& p, const std::string& text) {
  fs::create_directories(p.parent_path());
  std::ofstream(p) << text;
}

std::string frame_line(std::size_t cells, double v) {
  std::string s;
  for (std::size_t i = 0; i < cells; ++i) s += (i ? " " : "") + std::to_string(static_cast<int>(v) + static_cast<int>(i % 3));
  return s + "\n";
}

}  // namespace

TEST_CASE("adapter templates") {
  const Corpus p = adapter_template(Adapter::kPmatData);
  CHECK(p.grid.rows == 64);
  CHECK(p.grid.cols == 32);
  CHECK(p.feature_mask == full_feature_mask());
  CHECK_FALSE(p.posture_groups.empty());
  const Corpus h = adapter_template(Adapter::kHrlRos);
  CHECK(h.grid.rows == 64);
  CHECK(h.grid.cols == 27);
  CHECK(h.feature_mask == prenormalized_feature_mask());
  CHECK(adapter_from_string("hrlros") == Adapter::kHrlRos);
  CHECK_THROWS(adapter_from_string("kinect"));
}

TEST_CASE("raw recordings become a corpus") {
  const fs::path raw = testutil::scratch("ingest");
  const std::size_t cells = 64 * 32;
  write(raw / "subjects.csv", "subject_id,height_m,weight_kg,age_years\nS1,1.7,70,31\nS2,1.8,90,\n");
  write(raw / "S1" / "1.txt", frame_line(cells, 10) + frame_line(cells, 20) + "\n" + frame_line(cells, 30));
  write(raw / "S1" / "4.txt", frame_line(cells, 40));
  write(raw / "S2" / "17.txt", frame_line(cells, 50) + frame_line(cells, 60));
  write(raw / "S2" / "notes.md", "ignored");

  IngestOptions opt;
  const Corpus c = ingest_raw(raw, opt);
  CHECK(c.frames.size() == 6);
  CHECK(c.subjects.size() == 2);
  CHECK(c.frames[0].subject_id == "S1");
  CHECK(c.frames[0].values[0] == 10);
  CHECK(c.frames[0].values[1] == 11);
  CHECK(c.frames[2].values[0] == 30);
  CHECK(c.frames[2].frame_index == 2);

  opt.skip_leading_frames = 1;
  const Corpus skipped = ingest_raw(raw, opt);
  CHECK(skipped.frames.size() == 3);
  CHECK(skipped.frames[0].values[0] == 20);

  write(raw / "S3" / "1.txt", frame_line(cells, 10));
  CHECK_THROWS_WITH_AS(ingest_raw(raw, IngestOptions{}), doctest::Contains("S3"), LoadError);
  fs::remove_all(raw / "S3");

  write(raw / "S2" / "18.txt", frame_line(cells, 10));
  CHECK_THROWS(ingest_raw(raw, IngestOptions{}));
  fs::remove(raw / "S2" / "18.txt");

  write(raw / "S2" / "2.txt", frame_line(cells - 1, 10));
  CHECK_THROWS_WITH_AS(ingest_raw(raw, IngestOptions{}), doctest::Contains("2.txt:1"), LoadError);
  write(raw / "S2" / "2.txt", frame_line(cells, 1001));
  CHECK_THROWS_WITH_AS(ingest_raw(raw, IngestOptions{}), doctest::Contains("outside"), LoadError);
}
