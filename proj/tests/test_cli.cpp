#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "test_util.hpp"

namespace fs = std::filesystem;

namespace {

int run(const std::string& args, const fs::path& err = {}) {
  std::string cmd = std::string(BEDSENSE_CLI) + " " + args;
  cmd += err.empty() ? " 2>/dev/null" : " 2>" + err.string();
  const int status = std::system(cmd.c_str());
  return status == 0 ? 0 : 1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("synth, features and kNN eval") {
  const fs::path d = testutil::scratch("cli_smoke");
  const std::string root = d.string();
  REQUIRE(run("synth --subjects 3 --frames-per-subject 20 --seed 5 --out " + root + "/corpus") == 0);
  REQUIRE(run("preprocess --in " + root + "/corpus --out " + root + "/clean") == 0);
  REQUIRE(run("features --in " + root + "/clean --out " + root + "/f.csv") == 0);
  REQUIRE(run("eval --features " + root + "/f.csv --recipe knn --folds 10 --seed 1 --report-out " + root +
              "/r.json") == 0);
  CHECK(fs::exists(d / "r.json"));
  CHECK(fs::exists(d / "r.csv"));
  REQUIRE(run("report --in " + root + "/r.json --format csv --out " + root + "/agg.csv") == 0);
  CHECK(slurp(d / "agg.csv").rfind("metric,mean,std,folds", 0) == 0);
  CHECK_FALSE(fs::exists(d / "corpus.partial"));
  for (const auto& e : fs::directory_iterator(d)) CHECK(e.path().extension() != ".tmp");
  const std::string report = slurp(d / "r.json");
  CHECK(report.find("\"config_echo\"") != std::string::npos);
  CHECK(report.find("\"seed\"") != std::string::npos);
}

TEST_CASE("too few frames for the folds") {
  const fs::path d = testutil::scratch("cli_short");
  const std::string root = d.string();
  REQUIRE(run("synth --subjects 2 --frames-per-subject 9 --seed 5 --out " + root + "/corpus") == 0);
  REQUIRE(run("features --in " + root + "/corpus --out " + root + "/f.csv") == 0);
  CHECK(run("eval --features " + root + "/f.csv --recipe knn --folds 10 --seed 1 --report-out " + root + "/r.json",
            d / "err.txt") != 0);
  const std::string err = slurp(d / "err.txt");
  CHECK(err.find("subject S1") != std::string::npos);
  CHECK(std::count(err.begin(), err.end(), '\n') == 1);
  CHECK_FALSE(fs::exists(d / "r.json"));
}

TEST_CASE("flag errors") {
  const fs::path d = testutil::scratch("cli_flags");
  CHECK(run("synth --out " + d.string() + "/c") != 0);  // seed is mandatory
  CHECK(run("eval --bogus") != 0);
  CHECK(run("features --in " + d.string() + "/missing --out x.csv") != 0);
  CHECK(run("synth --subjects 2 --frames-per-subject 5 --seed 1 --noise loud --out " + d.string() + "/c") != 0);
  CHECK_FALSE(fs::exists(d / "c"));
}

TEST_CASE("train writes a model") {
  const fs::path d = testutil::scratch("cli_train");
  const std::string root = d.string();
  REQUIRE(run("synth --subjects 2 --frames-per-subject 10 --seed 3 --out " + root + "/corpus") == 0);
  REQUIRE(run("features --in " + root + "/corpus --out " + root + "/f.csv") == 0);
  REQUIRE(run("train --features " + root + "/f.csv --model-out " + root + "/m.json --max-iter 5 --hidden 8,8 --seed 2") ==
          0);
  const std::string model = slurp(d / "m.json");
  CHECK(model.find("\"stop_reason\"") != std::string::npos);
}
