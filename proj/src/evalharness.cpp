#include "bedsense/evalharness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <thread>

#include "bedsense/error.hpp"
#include "bedsense/rng.hpp"
#include "bedsense/textio.hpp"

namespace bedsense::eval {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using nlohmann::ordered_json;
using namespace bedsense::textio;

std::vector<std::size_t> FoldPlan::test_rows(int fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < assignment.size(); ++i) {
    if (assignment[i] == fold) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> FoldPlan::train_rows(int fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < assignment.size(); ++i) {
    if (assignment[i] != fold) out.push_back(i);
  }
  return out;
}

FoldPlan make_folds(std::span<const std::string> row_subjects, int n_folds, std::uint64_t seed) {
  if (n_folds < 2) throw DomainError("make_folds: need at least 2 folds");
  std::map<std::string, std::vector<std::size_t>> by_subject;
  for (std::size_t i = 0; i < row_subjects.size(); ++i) by_subject[row_subjects[i]].push_back(i);
  if (by_subject.empty()) throw DomainError("make_folds: no frames");
  for (const auto& [id, rows] : by_subject) {
    if (static_cast<int>(rows.size()) < n_folds) {
      throw DomainError("subject " + id + " has " + std::to_string(rows.size()) + " frames, fewer than " +
                        std::to_string(n_folds) + " folds");
    }
  }
  FoldPlan plan;
  plan.n_folds = n_folds;
  plan.seed = seed;
  plan.assignment.assign(row_subjects.size(), -1);
  std::uint64_t stream = 0;
  for (auto& [id, rows] : by_subject) {
    Rng rng(Rng::derive(seed, stream++));
    rng.shuffle(rows);
    for (std::size_t k = 0; k < rows.size(); ++k) plan.assignment[rows[k]] = static_cast<int>(k % n_folds);
  }
  return plan;
}

FoldPlan make_folds(const FeatureTable& table, int n_folds, std::uint64_t seed) {
  std::vector<std::string> ids;
  ids.reserve(table.rows.size());
  for (const auto& r : table.rows) ids.push_back(r.subject_id);
  return make_folds(ids, n_folds, seed);
}

FoldPlan make_folds(const Corpus& corpus, int n_folds, std::uint64_t seed) {
  std::vector<std::string> ids;
  ids.reserve(corpus.frames.size());
  for (const auto& f : corpus.frames) ids.push_back(f.subject_id);
  return make_folds(ids, n_folds, seed);
}

// ---------------------------------------------------------------------------

namespace {

template <typename A, typename B>
void check_aligned(std::span<A> pred, std::span<B> truth, const char* what) {
  if (pred.empty() || pred.size() != truth.size()) {
    throw DomainError(std::string(what) + ": inputs must be non-empty and equally long");
  }
}

}  // namespace

double r2(std::span<const double> pred, std::span<const double> truth) {
  check_aligned(pred, truth, "r2");
  const double mean = std::accumulate(truth.begin(), truth.end(), 0.0) / static_cast<double>(truth.size());
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    ss_res += (truth[i] - pred[i]) * (truth[i] - pred[i]);
    ss_tot += (truth[i] - mean) * (truth[i] - mean);
  }
  if (ss_tot == 0.0) throw DomainError("r2 undefined: truth is constant");
  return 1.0 - ss_res / ss_tot;
}

double rmse(std::span<const double> pred, std::span<const double> truth) {
  check_aligned(pred, truth, "rmse");
  double ss = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) ss += (truth[i] - pred[i]) * (truth[i] - pred[i]);
  return std::sqrt(ss / static_cast<double>(truth.size()));
}

double accuracy(std::span<const int> pred, std::span<const int> truth) {
  check_aligned(pred, truth, "accuracy");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hits += pred[i] == truth[i];
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

ConfusionMatrix confusion_matrix(std::span<const int> pred, std::span<const int> truth, int n_classes) {
  check_aligned(pred, truth, "confusion_matrix");
  if (n_classes < 1) throw DomainError("confusion_matrix: need at least one class");
  ConfusionMatrix cm(static_cast<std::size_t>(n_classes), std::vector<long long>(static_cast<std::size_t>(n_classes), 0));
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] < 0 || truth[i] >= n_classes || pred[i] < 0 || pred[i] >= n_classes) {
      throw DomainError("confusion_matrix: class label out of range");
    }
    ++cm[static_cast<std::size_t>(truth[i])][static_cast<std::size_t>(pred[i])];
  }
  return cm;
}

PrfReport per_class_prf(const ConfusionMatrix& cm) {
  const std::size_t k = cm.size();
  if (k == 0) throw DomainError("per_class_prf: empty confusion matrix");
  PrfReport out;
  out.per_class.resize(k);
  for (std::size_t c = 0; c < k; ++c) {
    long long tp = cm[c][c], predicted = 0, actual = 0;
    for (std::size_t o = 0; o < k; ++o) {
      predicted += cm[o][c];
      actual += cm[c][o];
    }
    ClassScores& s = out.per_class[c];
    s.support = actual;
    s.precision = predicted > 0 ? static_cast<double>(tp) / static_cast<double>(predicted) : 0.0;
    s.recall = actual > 0 ? static_cast<double>(tp) / static_cast<double>(actual) : 0.0;
    s.f1 = s.precision + s.recall > 0.0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
    out.macro_precision += s.precision;
    out.macro_recall += s.recall;
    out.macro_f1 += s.f1;
  }
  out.macro_precision /= static_cast<double>(k);
  out.macro_recall /= static_cast<double>(k);
  out.macro_f1 /= static_cast<double>(k);
  return out;
}

PrfReport per_class_prf(std::span<const int> pred, std::span<const int> truth, int n_classes) {
  return per_class_prf(confusion_matrix(pred, truth, n_classes));
}

// ---------------------------------------------------------------------------

RecipeKind recipe_from_string(const std::string& name) {
  if (name == "mtnet") return RecipeKind::kMtnet;
  if (name == "knn") return RecipeKind::kKnn;
  if (name == "gnb") return RecipeKind::kGnb;
  if (name == "linreg") return RecipeKind::kLinreg;
  throw DomainError("unknown recipe '" + name + "'");
}

std::string to_string(RecipeKind kind) {
  switch (kind) {
    case RecipeKind::kMtnet: return "mtnet";
    case RecipeKind::kKnn: return "knn";
    case RecipeKind::kGnb: return "gnb";
    case RecipeKind::kLinreg: return "linreg";
  }
  return "unknown";
}

ordered_json to_json(const Recipe& recipe) {
  ordered_json j;
  j["recipe"] = to_string(recipe.kind);
  switch (recipe.kind) {
    case RecipeKind::kMtnet: j["mtnet"] = mtnet::to_json(recipe.mtnet); break;
    case RecipeKind::kKnn:
      j["k"] = recipe.knn_k;
      j["metric"] = baselines::to_string(recipe.knn_metric);
      break;
    case RecipeKind::kGnb: j["variance_floor"] = baselines::kVarianceFloor; break;
    case RecipeKind::kLinreg: break;
  }
  j["bmi_class_mode"] = baselines::to_string(recipe.class_mode);
  return j;
}

namespace {

struct Dataset {
  MatrixXd x;  // rows × features
  std::vector<int> identity;
  VectorXd bmi;
  std::vector<std::string> subject_ids;
  bool with_classes = false;
};

Dataset assemble(const FeatureTable& table) {
  Dataset d;
  d.subject_ids = table.subject_ids();
  const Index n = static_cast<Index>(table.rows.size());
  const Index f = static_cast<Index>(table.mask.count());
  d.x.resize(n, f);
  d.identity.resize(static_cast<std::size_t>(n));
  d.bmi.resize(n);
  for (Index i = 0; i < n; ++i) {
    const FeatureRow& row = table.rows[static_cast<std::size_t>(i)];
    Index c = 0;
    for (std::size_t k = 0; k < kFeatureCount; ++k) {
      if (table.mask.test(k)) d.x(i, c++) = row.features.values[k];
    }
    d.identity[static_cast<std::size_t>(i)] = static_cast<int>(
        std::lower_bound(d.subject_ids.begin(), d.subject_ids.end(), row.subject_id) - d.subject_ids.begin());
    d.bmi(i) = row.bmi;
  }
  return d;
}

bool classes_available(const FeatureTable& table, const std::vector<std::string>& ids) {
  if (table.subjects.size() < static_cast<std::size_t>(baselines::kBmiClassCount)) return false;
  for (const auto& id : ids) {
    const bool found = std::any_of(table.subjects.begin(), table.subjects.end(),
                                   [&](const SubjectRecord& s) { return s.subject_id == id; });
    if (!found) return false;
  }
  return true;
}

MatrixXd take_rows(const MatrixXd& m, const std::vector<std::size_t>& idx) {
  MatrixXd out(static_cast<Index>(idx.size()), m.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) out.row(static_cast<Index>(i)) = m.row(static_cast<Index>(idx[i]));
  return out;
}

template <typename T>
std::vector<T> take(const std::vector<T>& v, const std::vector<std::size_t>& idx) {
  std::vector<T> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(v[i]);
  return out;
}

std::vector<double> take(const VectorXd& v, const std::vector<std::size_t>& idx) {
  std::vector<double> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(v(static_cast<Index>(i)));
  return out;
}

ClassificationResult classify_result(const std::vector<int>& pred, const std::vector<int>& truth,
                                     std::vector<std::string> names) {
  ClassificationResult r;
  const int k = static_cast<int>(names.size());
  r.accuracy = accuracy(pred, truth);
  r.confusion = confusion_matrix(pred, truth, k);
  r.prf = per_class_prf(r.confusion);
  r.class_names = std::move(names);
  return r;
}

std::vector<std::string> class_names() {
  std::vector<std::string> names;
  for (int c = 0; c < baselines::kBmiClassCount; ++c) names.push_back(std::to_string(c));
  return names;
}

FoldResult run_fold(const FeatureTable& table, const Dataset& d, const Recipe& recipe, const FoldPlan& plan, int fold) {
  FoldResult r;
  r.fold = fold;
  const auto train_idx = plan.train_rows(fold);
  const auto test_idx = plan.test_rows(fold);
  r.n_train = train_idx.size();
  r.n_test = test_idx.size();
  if (train_idx.empty() || test_idx.empty()) throw DomainError("fold " + std::to_string(fold) + " is empty");

  const MatrixXd x_train = take_rows(d.x, train_idx);
  const MatrixXd x_test = take_rows(d.x, test_idx);
  const std::vector<int> id_train = take(d.identity, train_idx);
  const std::vector<int> id_test = take(d.identity, test_idx);
  const std::vector<double> bmi_train = take(d.bmi, train_idx);
  const std::vector<double> bmi_test = take(d.bmi, test_idx);
  const int n_subjects = static_cast<int>(d.subject_ids.size());

  std::vector<int> cls_train, cls_test;
  if (d.with_classes) {
    baselines::KMeansOptions km;
    km.seed = Rng::derive(plan.seed, 0xC000 + static_cast<std::uint64_t>(fold));
    std::vector<int> seen(static_cast<std::size_t>(n_subjects), 0);
    for (int id : id_train) seen[static_cast<std::size_t>(id)] = 1;
    std::vector<SubjectRecord> train_subjects;
    for (const auto& s : table.subjects) {
      const auto it = std::lower_bound(d.subject_ids.begin(), d.subject_ids.end(), s.subject_id);
      if (it != d.subject_ids.end() && *it == s.subject_id && seen[static_cast<std::size_t>(it - d.subject_ids.begin())]) {
        train_subjects.push_back(s);
      }
    }
    const auto classes = baselines::build_bmi_classes(train_subjects, recipe.class_mode, km);
    std::vector<int> by_id(static_cast<std::size_t>(n_subjects), -1);
    for (const auto& [sid, c] : classes) {
      by_id[static_cast<std::size_t>(std::lower_bound(d.subject_ids.begin(), d.subject_ids.end(), sid) -
                                     d.subject_ids.begin())] = c;
    }
    for (int id : id_train) cls_train.push_back(by_id[static_cast<std::size_t>(id)]);
    for (int id : id_test) {
      if (by_id[static_cast<std::size_t>(id)] < 0) throw DomainError("test subject missing from training classes");
      cls_test.push_back(by_id[static_cast<std::size_t>(id)]);
    }
  }

  switch (recipe.kind) {
    case RecipeKind::kMtnet: {
      mtnet::TrainingData data;
      data.features = x_train;
      data.identities = id_train;
      data.bmi = Eigen::Map<const VectorXd>(bmi_train.data(), static_cast<Index>(bmi_train.size()));
      data.n_subjects = n_subjects;
      mtnet::TrainConfig cfg = recipe.mtnet;
      cfg.seed = Rng::derive(recipe.mtnet.seed, static_cast<std::uint64_t>(fold));
      mtnet::TrainResult trained = mtnet::train(data, cfg);
      trained.model.mask = table.mask;
      trained.model.subject_ids = d.subject_ids;
      r.events.push_back("optimizer stopped: " + optim::to_string(trained.optimizer.reason) + " after " +
                         std::to_string(trained.optimizer.iterations) + " iterations, loss " +
                         format_double(trained.optimizer.loss));
      for (const auto& e : trained.optimizer.events) r.events.push_back(e);
      const mtnet::Predictions p = mtnet::predict(trained.model, x_test);
      r.identity = classify_result(p.identity, id_test, d.subject_ids);
      const std::vector<double> est(p.bmi.data(), p.bmi.data() + p.bmi.size());
      r.bmi_r2 = r2(est, bmi_test);
      r.bmi_rmse = rmse(est, bmi_test);
      if (d.with_classes) {
        const mtnet::BmiClassHead head =
            mtnet::fit_bmi_class_head(trained.model, x_train, cls_train, baselines::kBmiClassCount);
        r.bmi_class = classify_result(head.predict(trained.model, x_test), cls_test, class_names());
      }
      break;
    }
    case RecipeKind::kKnn:
    case RecipeKind::kGnb: {
      const auto norm = mtnet::Normalizer::fit(x_train);
      const MatrixXd zt = norm.normalize(x_train);
      const MatrixXd zs = norm.normalize(x_test);
      auto fit_predict = [&](const std::vector<int>& labels, int n_classes) {
        if (recipe.kind == RecipeKind::kKnn) {
          return baselines::KnnClassifier(zt, labels, recipe.knn_k, recipe.knn_metric).classify_rows(zs);
        }
        return baselines::GaussianNaiveBayes::fit(zt, labels, n_classes).classify_rows(zs);
      };
      r.identity = classify_result(fit_predict(id_train, n_subjects), id_test, d.subject_ids);
      if (d.with_classes) {
        r.bmi_class = classify_result(fit_predict(cls_train, baselines::kBmiClassCount), cls_test, class_names());
      }
      break;
    }
    case RecipeKind::kLinreg: {
      const auto norm = mtnet::Normalizer::fit(x_train);
      const auto model = baselines::LinearRegression::fit(
          norm.normalize(x_train), Eigen::Map<const VectorXd>(bmi_train.data(), static_cast<Index>(bmi_train.size())));
      const VectorXd p = model.predict_rows(norm.normalize(x_test));
      const std::vector<double> est(p.data(), p.data() + p.size());
      r.bmi_r2 = r2(est, bmi_test);
      r.bmi_rmse = rmse(est, bmi_test);
      break;
    }
  }
  return r;
}

void add_classification(std::map<std::string, std::vector<double>>& acc, const std::string& prefix,
                        const ClassificationResult& c) {
  acc[prefix + ".accuracy"].push_back(c.accuracy);
  acc[prefix + ".macro_precision"].push_back(c.prf.macro_precision);
  acc[prefix + ".macro_recall"].push_back(c.prf.macro_recall);
  acc[prefix + ".macro_f1"].push_back(c.prf.macro_f1);
  for (std::size_t k = 0; k < c.class_names.size(); ++k) {
    const auto& s = c.prf.per_class[k];
    acc[prefix + ".precision." + c.class_names[k]].push_back(s.precision);
    acc[prefix + ".recall." + c.class_names[k]].push_back(s.recall);
    acc[prefix + ".f1." + c.class_names[k]].push_back(s.f1);
  }
}

ordered_json classification_json(const ClassificationResult& c) {
  ordered_json j;
  j["accuracy"] = c.accuracy;
  j["macro_precision"] = c.prf.macro_precision;
  j["macro_recall"] = c.prf.macro_recall;
  j["macro_f1"] = c.prf.macro_f1;
  ordered_json per = ordered_json::array();
  for (std::size_t k = 0; k < c.class_names.size(); ++k) {
    const auto& s = c.prf.per_class[k];
    per.push_back({{"class", c.class_names[k]},
                   {"precision", s.precision},
                   {"recall", s.recall},
                   {"f1", s.f1},
                   {"support", s.support}});
  }
  j["per_class"] = std::move(per);
  j["confusion"] = c.confusion;
  return j;
}

ClassificationResult classification_from_json(const ordered_json& j) {
  ClassificationResult c;
  c.accuracy = j.at("accuracy").get<double>();
  c.prf.macro_precision = j.at("macro_precision").get<double>();
  c.prf.macro_recall = j.at("macro_recall").get<double>();
  c.prf.macro_f1 = j.at("macro_f1").get<double>();
  for (const auto& e : j.at("per_class")) {
    c.class_names.push_back(e.at("class").get<std::string>());
    c.prf.per_class.push_back({e.at("precision").get<double>(), e.at("recall").get<double>(), e.at("f1").get<double>(),
                               e.at("support").get<long long>()});
  }
  c.confusion = j.at("confusion").get<ConfusionMatrix>();
  return c;
}

ordered_json number_or_null(double v) { return std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr); }

double number_or_nan(const ordered_json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

}  // namespace

std::map<std::string, Aggregate> aggregate_folds(const std::vector<FoldResult>& folds) {
  std::map<std::string, std::vector<double>> values;
  for (const auto& f : folds) {
    if (f.failed) continue;
    if (f.identity) add_classification(values, "identity", *f.identity);
    if (f.bmi_r2) values["bmi.r2"].push_back(*f.bmi_r2);
    if (f.bmi_rmse) values["bmi.rmse"].push_back(*f.bmi_rmse);
    if (f.bmi_class) add_classification(values, "bmi_class", *f.bmi_class);
  }
  std::map<std::string, Aggregate> out;
  for (const auto& [name, v] : values) {
    Aggregate a;
    a.n = static_cast<int>(v.size());
    a.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    if (v.size() > 1) {
      double ss = 0.0;
      for (double x : v) ss += (x - a.mean) * (x - a.mean);
      a.std = std::sqrt(ss / static_cast<double>(v.size() - 1));
    } else {
      a.std = std::numeric_limits<double>::quiet_NaN();
    }
    out[name] = a;
  }
  return out;
}

std::optional<double> EvaluationReport::mean(const std::string& metric) const {
  const auto it = aggregate.find(metric);
  if (it == aggregate.end()) return std::nullopt;
  return it->second.mean;
}

EvaluationReport run_cv(const FeatureTable& table, const Recipe& recipe, const FoldPlan& plan) {
  if (plan.assignment.size() != table.rows.size()) throw DomainError("fold plan does not match the feature table");
  if (table.mask.count() == 0) throw DomainError("feature table has no active features");
  Dataset d = assemble(table);
  d.with_classes = recipe.bmi_classes && recipe.kind != RecipeKind::kLinreg && classes_available(table, d.subject_ids);

  EvaluationReport report;
  report.config_echo = to_json(recipe);
  report.config_echo["folds"] = plan.n_folds;
  report.config_echo["fold_seed"] = plan.seed;
  report.config_echo["bmi_classes"] = d.with_classes;
  ordered_json mask = ordered_json::array();
  for (std::size_t i = 0; i < kFeatureCount; ++i) mask.push_back(table.mask.test(i));
  report.config_echo["feature_mask"] = std::move(mask);
  report.config_echo["rows"] = table.rows.size();
  report.config_echo["subjects"] = d.subject_ids.size();
  if (!table.provenance.empty()) report.config_echo["features_provenance"] = table.provenance;

  report.folds.resize(static_cast<std::size_t>(plan.n_folds));
  unsigned workers = recipe.threads > 0 ? static_cast<unsigned>(recipe.threads) : std::thread::hardware_concurrency();
  workers = std::clamp(workers, 1u, static_cast<unsigned>(plan.n_folds));

  std::atomic<int> next{0};
  auto worker = [&] {
    for (int fold = next++; fold < plan.n_folds; fold = next++) {
      FoldResult& slot = report.folds[static_cast<std::size_t>(fold)];
      try {
        slot = run_fold(table, d, recipe, plan, fold);
      } catch (const std::exception& e) {
        slot = FoldResult{};
        slot.fold = fold;
        slot.failed = true;
        slot.error = e.what();
      }
    }
  };
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < workers; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  int failed = 0;
  std::string first_error;
  for (const auto& f : report.folds) {
    if (!f.failed) continue;
    if (failed++ == 0) first_error = "fold " + std::to_string(f.fold) + ": " + f.error;
  }
  if (failed >= 2) {
    throw DomainError("cross-validation aborted: " + std::to_string(failed) + " folds failed (" + first_error + ")");
  }
  report.aggregate = aggregate_folds(report.folds);
  return report;
}

// ---------------------------------------------------------------------------

ordered_json to_json(const EvaluationReport& report) {
  ordered_json j;
  j["config_echo"] = report.config_echo;
  ordered_json folds = ordered_json::array();
  for (const auto& f : report.folds) {
    ordered_json fj;
    fj["fold"] = f.fold;
    fj["status"] = f.failed ? "failed" : "ok";
    if (f.failed) fj["error"] = f.error;
    fj["n_train"] = f.n_train;
    fj["n_test"] = f.n_test;
    if (f.identity) fj["identity"] = classification_json(*f.identity);
    if (f.bmi_r2) fj["bmi"] = {{"r2", *f.bmi_r2}, {"rmse", *f.bmi_rmse}};
    if (f.bmi_class) fj["bmi_class"] = classification_json(*f.bmi_class);
    if (!f.events.empty()) fj["events"] = f.events;
    folds.push_back(std::move(fj));
  }
  j["per_fold"] = std::move(folds);
  ordered_json mean = ordered_json::object(), sd = ordered_json::object();
  for (const auto& [name, a] : report.aggregate) {
    mean[name] = number_or_null(a.mean);
    sd[name] = number_or_null(a.std);
  }
  j["aggregate"] = {{"mean", std::move(mean)}, {"std", std::move(sd)}};
  return j;
}

EvaluationReport report_from_json(const ordered_json& j) {
  EvaluationReport r;
  r.config_echo = j.at("config_echo");
  for (const auto& fj : j.at("per_fold")) {
    FoldResult f;
    f.fold = fj.at("fold").get<int>();
    f.failed = fj.at("status").get<std::string>() == "failed";
    if (fj.contains("error")) f.error = fj.at("error").get<std::string>();
    f.n_train = fj.at("n_train").get<std::size_t>();
    f.n_test = fj.at("n_test").get<std::size_t>();
    if (fj.contains("identity")) f.identity = classification_from_json(fj.at("identity"));
    if (fj.contains("bmi")) {
      f.bmi_r2 = fj.at("bmi").at("r2").get<double>();
      f.bmi_rmse = fj.at("bmi").at("rmse").get<double>();
    }
    if (fj.contains("bmi_class")) f.bmi_class = classification_from_json(fj.at("bmi_class"));
    if (fj.contains("events")) f.events = fj.at("events").get<std::vector<std::string>>();
    r.folds.push_back(std::move(f));
  }
  const auto& agg = j.at("aggregate");
  for (const auto& [name, v] : agg.at("mean").items()) {
    Aggregate a;
    a.mean = number_or_nan(v);
    a.std = number_or_nan(agg.at("std").at(name));
    r.aggregate[name] = a;
  }
  // Fold counts are not serialized; recover them from the folds.
  const auto counted = aggregate_folds(r.folds);
  for (auto& [name, a] : r.aggregate) {
    if (const auto it = counted.find(name); it != counted.end()) a.n = it->second.n;
  }
  return r;
}

std::string per_fold_csv(const EvaluationReport& report) {
  std::string out =
      "fold,status,n_train,n_test,identity_accuracy,identity_macro_f1,bmi_r2,bmi_rmse,bmi_class_accuracy,"
      "bmi_class_macro_f1\n";
  auto cell = [&](std::optional<double> v) {
    out += ',';
    if (v) append_double(out, *v);
  };
  for (const auto& f : report.folds) {
    out += std::to_string(f.fold) + ',' + (f.failed ? "failed" : "ok") + ',' + std::to_string(f.n_train) + ',' +
           std::to_string(f.n_test);
    cell(f.identity ? std::optional(f.identity->accuracy) : std::nullopt);
    cell(f.identity ? std::optional(f.identity->prf.macro_f1) : std::nullopt);
    cell(f.bmi_r2);
    cell(f.bmi_rmse);
    cell(f.bmi_class ? std::optional(f.bmi_class->accuracy) : std::nullopt);
    cell(f.bmi_class ? std::optional(f.bmi_class->prf.macro_f1) : std::nullopt);
    out += '\n';
  }
  return out;
}

void save_report(const EvaluationReport& report, const std::filesystem::path& path) {
  write_file_atomic(path, to_json(report).dump(2) + "\n");
  std::filesystem::path csv = path;
  csv.replace_extension(".csv");
  write_file_atomic(csv, per_fold_csv(report));
}

EvaluationReport load_report(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  try {
    return report_from_json(ordered_json::parse(text));
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(path.string() + ": malformed report: " + e.what());
  }
}

namespace {

std::string fixed(double v, int digits = 4) {
  if (!std::isfinite(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string pad(std::string s, std::size_t width) {
  if (s.size() < width) s.append(width - s.size(), ' ');
  return s;
}

const std::vector<std::string> kSummaryMetrics = {
    "identity.accuracy", "identity.macro_precision", "identity.macro_recall", "identity.macro_f1",
    "bmi.r2",            "bmi.rmse",                 "bmi_class.accuracy",    "bmi_class.macro_precision",
    "bmi_class.macro_recall", "bmi_class.macro_f1"};

void per_class_table(std::string& out, const EvaluationReport& report, const std::string& prefix,
                     const std::string& title) {
  std::vector<std::string> classes;
  const std::string key = prefix + ".precision.";
  for (const auto& [name, a] : report.aggregate) {
    if (name.rfind(key, 0) == 0) classes.push_back(name.substr(key.size()));
  }
  if (classes.empty()) return;
  out += "\n" + title + "\n";
  out += pad("class", 12) + pad("precision", 20) + pad("recall", 20) + "f1\n";
  auto ms = [&](const std::string& name) {
    const Aggregate& a = report.aggregate.at(name);
    return fixed(a.mean) + " ± " + fixed(a.std);
  };
  for (const auto& c : classes) {
    out += pad(c, 12) + pad(ms(prefix + ".precision." + c), 20) + pad(ms(prefix + ".recall." + c), 20) +
           ms(prefix + ".f1." + c) + "\n";
  }
}

}  // namespace

std::string render_text(const EvaluationReport& report) {
  std::string out;
  int ok = 0;
  for (const auto& f : report.folds) ok += !f.failed;
  out += "recipe " + report.config_echo.value("recipe", std::string("?")) + ", " + std::to_string(report.folds.size()) +
         " folds (" + std::to_string(ok) + " ok)\n\n";
  out += pad("metric", 28) + "mean ± std\n";
  for (const auto& name : kSummaryMetrics) {
    const auto it = report.aggregate.find(name);
    if (it == report.aggregate.end()) continue;
    out += pad(name, 28) + fixed(it->second.mean) + " ± " + fixed(it->second.std) + "\n";
  }
  per_class_table(out, report, "identity", "identity per subject");
  per_class_table(out, report, "bmi_class", "BMI class");
  return out;
}

std::string render_csv(const EvaluationReport& report) {
  std::string out = "metric,mean,std,folds\n";
  for (const auto& [name, a] : report.aggregate) {
    out += name + ',';
    if (std::isfinite(a.mean)) append_double(out, a.mean);
    out += ',';
    if (std::isfinite(a.std)) append_double(out, a.std);
    out += ',' + std::to_string(a.n) + '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------

ImportanceReport drop_column_importance(const FeatureTable& table, const Recipe& recipe, const FoldPlan& plan) {
  ImportanceReport out;
  out.full = run_cv(table, recipe, plan);
  const auto full_acc = out.full.mean("identity.accuracy");
  const auto full_r2 = out.full.mean("bmi.r2");
  for (std::size_t j = 0; j < kFeatureCount; ++j) {
    if (!table.mask.test(j)) continue;
    if (table.mask.count() == 1) break;
    const EvaluationReport reduced = run_cv(drop_feature(table, j), recipe, plan);
    FeatureImportance fi;
    fi.feature = j;
    fi.name = std::string(kFeatureNames[j]);
    if (const auto acc = reduced.mean("identity.accuracy"); acc && full_acc) fi.delta_accuracy = *full_acc - *acc;
    if (const auto r = reduced.mean("bmi.r2"); r && full_r2) fi.delta_r2 = *full_r2 - *r;
    out.features.push_back(std::move(fi));
  }
  return out;
}

ordered_json to_json(const ImportanceReport& report) {
  ordered_json j;
  j["config_echo"] = report.full.config_echo;
  ordered_json full = ordered_json::object();
  if (const auto a = report.full.mean("identity.accuracy")) full["identity.accuracy"] = *a;
  if (const auto r = report.full.mean("bmi.r2")) full["bmi.r2"] = *r;
  j["full"] = std::move(full);
  ordered_json feats = ordered_json::array();
  for (const auto& f : report.features) {
    ordered_json fj;
    fj["feature"] = f.feature;
    fj["name"] = f.name;
    fj["delta_accuracy"] = f.delta_accuracy ? ordered_json(*f.delta_accuracy) : ordered_json(nullptr);
    fj["delta_r2"] = f.delta_r2 ? ordered_json(*f.delta_r2) : ordered_json(nullptr);
    feats.push_back(std::move(fj));
  }
  j["features"] = std::move(feats);
  return j;
}

}  // namespace bedsense::eval
