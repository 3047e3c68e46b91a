#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <fstream>
#include <set>

#include "bedsense/error.hpp"
#include "bedsense/evalharness.hpp"
#include "bedsense/rng.hpp"
#include "test_util.hpp"

using namespace bedsense;
using namespace bedsense::eval;

namespace {

// Subjects sit at distinct points in feature space; `signal` feeds BMI.
FeatureTable toy_table(int subjects, int frames, std::uint64_t seed, double noise = 0.05) {
  Rng rng(seed);
  FeatureTable t;
  for (int s = 0; s < subjects; ++s) {
    std::array<double, kFeatureCount> center{};
    for (auto& c : center) c = rng.uniform(-3, 3);
    for (int k = 0; k < frames; ++k) {
      FeatureRow r;
      r.subject_id = "S" + std::to_string(s + 1);
      r.posture_id = 1;
      r.frame_index = k;
      for (std::size_t j = 0; j < kFeatureCount; ++j) r.features.values[j] = center[j] + noise * rng.normal();
      r.bmi = 20.0 + 2.0 * s;
      t.rows.push_back(r);
    }
  }
  return t;
}

Recipe knn1() {
  Recipe r;
  r.kind = RecipeKind::kKnn;
  r.knn_k = 1;
  return r;
}

}  // namespace

TEST_CASE("fold plans") {
  std::vector<std::string> ids;
  for (int i = 0; i < 40; ++i) ids.push_back(i % 2 ? "B" : "A");
  const FoldPlan p = make_folds(ids, 10, 7);
  for (int f = 0; f < 10; ++f) {
    const auto test = p.test_rows(f);
    CHECK(test.size() == 4);
    int a = 0;
    for (auto i : test) a += ids[i] == "A";
    CHECK(a == 2);
    const auto train = p.train_rows(f);
    CHECK(train.size() == 36);
    std::set<std::string> seen;
    for (auto i : train) seen.insert(ids[i]);
    CHECK(seen.size() == 2);
  }
  std::vector<int> hits(40, 0);
  for (int f = 0; f < 10; ++f) {
    for (auto i : p.test_rows(f)) ++hits[i];
  }
  CHECK(std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; }));
  CHECK(make_folds(ids, 10, 7).assignment == p.assignment);
  CHECK(make_folds(ids, 10, 8).assignment != p.assignment);

  for (int i = 0; i < 5; ++i) ids.push_back("C");
  CHECK_THROWS_WITH_AS(make_folds(ids, 10, 7), doctest::Contains("subject C"), DomainError);
  CHECK_THROWS_AS(make_folds(ids, 1, 7), DomainError);
}

TEST_CASE("regression metrics") {
  const std::vector<double> t = {1, 2, 3};
  CHECK(r2(t, t) == 1.0);
  CHECK(r2(std::vector<double>{2, 2, 2}, t) == 0.0);
  CHECK(r2(std::vector<double>{1, 2, 4}, t) == 0.5);
  CHECK(rmse(std::vector<double>{1, 2, 4}, t) == std::sqrt(1.0 / 3.0));
  CHECK(rmse(t, t) == 0.0);
  CHECK_THROWS_AS(r2(t, std::vector<double>{5, 5, 5}), DomainError);
  CHECK_THROWS_AS(r2(std::vector<double>{}, std::vector<double>{}), DomainError);
  CHECK_THROWS_AS(rmse(t, std::vector<double>{1, 2}), DomainError);
}

TEST_CASE("classification metrics") {
  SUBCASE("all correct") {
    const std::vector<int> y = {0, 1, 2, 2, 1};
    CHECK(accuracy(y, y) == 1.0);
    const PrfReport r = per_class_prf(y, y, 3);
    for (const auto& c : r.per_class) {
      CHECK(c.precision == 1.0);
      CHECK(c.recall == 1.0);
      CHECK(c.f1 == 1.0);
    }
    CHECK(r.macro_f1 == 1.0);
  }
  SUBCASE("never-predicted class") {
    const std::vector<int> truth = {0, 1, 0, 1}, pred = {0, 0, 0, 0};
    const PrfReport r = per_class_prf(pred, truth, 2);
    CHECK(r.per_class[1].precision == 0.0);
    CHECK(r.per_class[1].recall == 0.0);
    CHECK(r.per_class[1].f1 == 0.0);
    CHECK(r.per_class[0].precision == 0.5);
    CHECK(r.per_class[0].recall == 1.0);
    CHECK(accuracy(pred, truth) == 0.5);
  }
  SUBCASE("three-class worked example") {
    // truth 0: 3 right, 1 as class 1; truth 1: 2 right, 2 as class 2;
    // truth 2: 1 as class 0, 1 right.
    const std::vector<int> truth = {0, 0, 0, 0, 1, 1, 1, 1, 2, 2};
    const std::vector<int> pred = {0, 0, 0, 1, 1, 1, 2, 2, 0, 2};
    const ConfusionMatrix cm = confusion_matrix(pred, truth, 3);
    CHECK(cm == ConfusionMatrix{{3, 1, 0}, {0, 2, 2}, {1, 0, 1}});
    CHECK(accuracy(pred, truth) == 0.6);
    const PrfReport r = per_class_prf(cm);
    CHECK(r.per_class[0].precision == 0.75);
    CHECK(r.per_class[0].recall == 0.75);
    CHECK(r.per_class[0].f1 == 0.75);
    CHECK(r.per_class[1].precision == doctest::Approx(2.0 / 3).epsilon(1e-15));
    CHECK(r.per_class[1].recall == 0.5);
    CHECK(r.per_class[1].f1 == doctest::Approx(4.0 / 7).epsilon(1e-15));
    CHECK(r.per_class[2].precision == doctest::Approx(1.0 / 3).epsilon(1e-15));
    CHECK(r.per_class[2].recall == 0.5);
    CHECK(r.per_class[2].f1 == doctest::Approx(0.4).epsilon(1e-15));
    CHECK(r.per_class[1].support == 4);
    CHECK(r.macro_precision == doctest::Approx(7.0 / 12).epsilon(1e-15));
    CHECK(r.macro_recall == doctest::Approx(7.0 / 12).epsilon(1e-15));
    CHECK(r.macro_f1 == doctest::Approx((0.75 + 4.0 / 7 + 0.4) / 3).epsilon(1e-15));
    const PrfReport direct = per_class_prf(pred, truth, 3);
    CHECK(direct.macro_f1 == r.macro_f1);
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(accuracy(std::vector<int>{}, std::vector<int>{}), DomainError);
    CHECK_THROWS_AS(confusion_matrix(std::vector<int>{3}, std::vector<int>{0}, 3), DomainError);
  }
}

TEST_CASE("kNN k=1 cross-validation") {
  const FeatureTable t = toy_table(4, 30, 1);
  const FoldPlan plan = make_folds(t, 10, 3);
  const EvaluationReport rep = run_cv(t, knn1(), plan);
  REQUIRE(rep.folds.size() == 10);
  CHECK(*rep.mean("identity.accuracy") >= 0.99);
  CHECK_FALSE(rep.mean("bmi_class.accuracy").has_value());

  double sum = 0;
  for (const auto& f : rep.folds) {
    REQUIRE_FALSE(f.failed);
    sum += f.identity->accuracy;
    long long total = 0;
    for (std::size_t c = 0; c < f.identity->confusion.size(); ++c) {
      long long row = 0;
      for (auto v : f.identity->confusion[c]) row += v;
      CHECK(row == f.identity->prf.per_class[c].support);
      total += row;
    }
    CHECK(total == static_cast<long long>(f.n_test));
  }
  CHECK(std::abs(sum / 10 - rep.aggregate.at("identity.accuracy").mean) < 1e-12);
  CHECK(rep.aggregate.at("identity.accuracy").n == 10);
}

TEST_CASE("constant predictions have no skill") {
  FeatureTable t = toy_table(3, 20, 2);
  for (auto& r : t.rows) r.features.values.fill(1.0);
  Recipe lin;
  lin.kind = RecipeKind::kLinreg;
  const EvaluationReport rep = run_cv(t, lin, make_folds(t, 10, 1));
  for (const auto& f : rep.folds) CHECK(*f.bmi_r2 <= 0.0);
}

TEST_CASE("reports are deterministic and round trip") {
  FeatureTable t = toy_table(6, 20, 4, 1.0);
  for (int s = 0; s < 6; ++s) {
    t.subjects.push_back(make_subject("S" + std::to_string(s + 1), 1.6 + 0.05 * s, 50.0 + 9.0 * s, 30.0));
  }
  for (auto& r : t.rows) r.bmi = t.subjects[static_cast<std::size_t>(std::stoi(r.subject_id.substr(1)) - 1)].bmi;
  const FoldPlan plan = make_folds(t, 5, 11);
  Recipe rec;
  rec.kind = RecipeKind::kGnb;
  rec.threads = 1;
  const EvaluationReport a = run_cv(t, rec, plan);
  rec.threads = 3;
  const EvaluationReport b = run_cv(t, rec, plan);
  CHECK(to_json(a).dump() == to_json(b).dump());
  CHECK(a.mean("bmi_class.accuracy").has_value());
  CHECK(a.aggregate.count("identity.precision.S3") == 1);
  CHECK(a.aggregate.count("bmi_class.f1.4") == 1);

  const auto dir = testutil::scratch("report");
  save_report(a, dir / "r.json");
  CHECK(std::filesystem::exists(dir / "r.csv"));
  const EvaluationReport back = load_report(dir / "r.json");
  CHECK(to_json(back).dump() == to_json(a).dump());
  CHECK(render_text(back) == render_text(a));
  CHECK(render_text(a).find("±") != std::string::npos);
  CHECK(render_csv(a).rfind("metric,mean,std,folds\n", 0) == 0);
  CHECK(per_fold_csv(a).find("bmi_class_accuracy") != std::string::npos);
}

TEST_CASE("single fold aggregates have undefined spread") {
  FoldResult f;
  f.bmi_r2 = 0.5;
  const auto agg = aggregate_folds({f});
  CHECK(agg.at("bmi.r2").mean == 0.5);
  CHECK(std::isnan(agg.at("bmi.r2").std));
  FoldResult g = f;
  g.bmi_r2 = 0.7;
  FoldResult broken;
  broken.failed = true;
  const auto agg2 = aggregate_folds({f, g, broken});
  CHECK(agg2.at("bmi.r2").n == 2);
  CHECK(agg2.at("bmi.r2").std == doctest::Approx(std::sqrt(0.02)));
}

TEST_CASE("drop-column importance") {
  Rng rng(9);
  FeatureTable t;
  for (int s = 0; s < 4; ++s) {
    for (int k = 0; k < 30; ++k) {
      FeatureRow r;
      r.subject_id = "S" + std::to_string(s + 1);
      for (auto& v : r.features.values) v = rng.normal();
      r.features.values[1] = r.features.values[0];
      r.bmi = 25.0 + 3.0 * r.features.values[0] + 0.1 * rng.normal();
      t.rows.push_back(r);
    }
  }
  Recipe lin;
  lin.kind = RecipeKind::kLinreg;
  const ImportanceReport rep = drop_column_importance(t, lin, make_folds(t, 10, 5));
  REQUIRE(rep.features.size() == kFeatureCount);
  CHECK(*rep.full.mean("bmi.r2") > 0.99);
  // Either copy of the signal can be dropped without loss.
  CHECK(std::abs(*rep.features[0].delta_r2) < 1e-9);
  CHECK(std::abs(*rep.features[1].delta_r2) < 1e-9);
  CHECK_FALSE(rep.features[0].delta_accuracy.has_value());
  for (std::size_t j = 2; j < kFeatureCount; ++j) CHECK(std::abs(*rep.features[j].delta_r2) < 0.01);

  // With a single copy, dropping it destroys the fit.
  FeatureTable single = drop_feature(t, 1);
  const ImportanceReport one = drop_column_importance(single, lin, make_folds(single, 10, 5));
  REQUIRE(one.features.size() == kFeatureCount - 1);
  CHECK(one.features[0].name == std::string(kFeatureNames[0]));
  CHECK(*one.features[0].delta_r2 > 0.2);
  const auto j = to_json(one);
  CHECK(j["features"].size() == kFeatureCount - 1);
}

TEST_CASE("recipes") {
  CHECK(recipe_from_string("gnb") == RecipeKind::kGnb);
  CHECK(to_string(RecipeKind::kLinreg) == "linreg");
  CHECK_THROWS(recipe_from_string("svm"));
  const FeatureTable t = toy_table(2, 10, 1);
  CHECK_THROWS_AS(run_cv(t, knn1(), make_folds(toy_table(2, 12, 1), 10, 1)), DomainError);
}
