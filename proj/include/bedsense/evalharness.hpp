#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "bedsense/baselines.hpp"
#include "bedsense/features.hpp"
#include "bedsense/mtnet.hpp"

namespace bedsense::eval {

// ---------------------------------------------------------------------------
// Fold plans

struct FoldPlan {
  int n_folds = 10;
  std::uint64_t seed = 0;
  std::vector<int> assignment;  // fold id per row

  std::vector<std::size_t> test_rows(int fold) const;
  std::vector<std::size_t> train_rows(int fold) const;
};

/// Each subject's rows are shuffled with the seed and dealt round-robin into
/// folds. Throws DomainError naming the first subject with fewer than
/// n_folds rows.
FoldPlan make_folds(std::span<const std::string> row_subjects, int n_folds, std::uint64_t seed);
FoldPlan make_folds(const FeatureTable& table, int n_folds, std::uint64_t seed);
FoldPlan make_folds(const Corpus& corpus, int n_folds, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Metrics

double r2(std::span<const double> pred, std::span<const double> truth);
double rmse(std::span<const double> pred, std::span<const double> truth);
double accuracy(std::span<const int> pred, std::span<const int> truth);

/// Rows are true classes, columns predicted classes.
using ConfusionMatrix = std::vector<std::vector<long long>>;
ConfusionMatrix confusion_matrix(std::span<const int> pred, std::span<const int> truth, int n_classes);

struct ClassScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  long long support = 0;
};

struct PrfReport {
  std::vector<ClassScores> per_class;
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
};

/// Precision is 0 for a class that is never predicted; F1 is 0 when P+R = 0.
PrfReport per_class_prf(std::span<const int> pred, std::span<const int> truth, int n_classes);
PrfReport per_class_prf(const ConfusionMatrix& cm);

// ---------------------------------------------------------------------------
// Cross-validation

enum class RecipeKind { kMtnet, kKnn, kGnb, kLinreg };

RecipeKind recipe_from_string(const std::string& name);
std::string to_string(RecipeKind kind);

struct Recipe {
  RecipeKind kind = RecipeKind::kMtnet;
  mtnet::TrainConfig mtnet;
  int knn_k = 10;
  baselines::Metric knn_metric = baselines::Metric::kEuclidean;
  baselines::BmiClassMode class_mode = baselines::BmiClassMode::kWeightHeight;
  /// Fit the five-class BMI task when the table has enough subject records.
  bool bmi_classes = true;
  /// Worker threads for folds; 0 picks the hardware concurrency.
  int threads = 0;
};

nlohmann::ordered_json to_json(const Recipe& recipe);

struct ClassificationResult {
  double accuracy = 0.0;
  PrfReport prf;
  ConfusionMatrix confusion;
  std::vector<std::string> class_names;
};

struct FoldResult {
  int fold = 0;
  bool failed = false;
  std::string error;
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  std::optional<ClassificationResult> identity;
  std::optional<double> bmi_r2;
  std::optional<double> bmi_rmse;
  std::optional<ClassificationResult> bmi_class;
  std::vector<std::string> events;
};

struct Aggregate {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation; NaN with one fold
  int n = 0;
};

struct EvaluationReport {
  nlohmann::ordered_json config_echo = nlohmann::ordered_json::object();
  std::vector<FoldResult> folds;
  std::map<std::string, Aggregate> aggregate;

  std::optional<double> mean(const std::string& metric) const;
};

/// Throws DomainError when two or more folds fail.
EvaluationReport run_cv(const FeatureTable& table, const Recipe& recipe, const FoldPlan& plan);

/// Mean and sample standard deviation of the named scalar metric over
/// successful folds.
std::map<std::string, Aggregate> aggregate_folds(const std::vector<FoldResult>& folds);

nlohmann::ordered_json to_json(const EvaluationReport& report);
EvaluationReport report_from_json(const nlohmann::ordered_json& j);
std::string per_fold_csv(const EvaluationReport& report);

void save_report(const EvaluationReport& report, const std::filesystem::path& path);
EvaluationReport load_report(const std::filesystem::path& path);

/// Aggregate table, one row per metric with "mean ± std".
std::string render_text(const EvaluationReport& report);
std::string render_csv(const EvaluationReport& report);

// ---------------------------------------------------------------------------
// Drop-column importance

struct FeatureImportance {
  std::size_t feature = 0;
  std::string name;
  std::optional<double> delta_accuracy;
  std::optional<double> delta_r2;
};

struct ImportanceReport {
  EvaluationReport full;
  std::vector<FeatureImportance> features;
};

ImportanceReport drop_column_importance(const FeatureTable& table, const Recipe& recipe, const FoldPlan& plan);
nlohmann::ordered_json to_json(const ImportanceReport& report);

}  // namespace bedsense::eval
