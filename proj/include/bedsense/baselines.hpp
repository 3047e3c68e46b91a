#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "bedsense/dataset.hpp"

namespace bedsense::baselines {

// ---------------------------------------------------------------------------
// k-nearest neighbours

enum class Metric { kEuclidean, kCosine, kMinkowski3 };

Metric metric_from_string(const std::string& name);
std::string to_string(Metric metric);

/// Cosine distance is 1 − a·b/(‖a‖‖b‖); a zero vector is a DomainError.
double distance(Metric metric, const Eigen::Ref<const Eigen::VectorXd>& a,
                const Eigen::Ref<const Eigen::VectorXd>& b);

/// Brute-force majority vote. Distance ties keep training order; vote ties
/// go to the smallest class id.
class KnnClassifier {
 public:
  KnnClassifier(Eigen::MatrixXd train_rows, std::vector<int> labels, int k = 10,
                Metric metric = Metric::kEuclidean);

  int classify(const Eigen::Ref<const Eigen::VectorXd>& query) const;
  std::vector<int> classify_rows(const Eigen::MatrixXd& rows) const;

 private:
  Eigen::MatrixXd train_;
  std::vector<int> labels_;
  int k_;
  Metric metric_;
};

int knn_classify(const Eigen::MatrixXd& train_rows, const std::vector<int>& labels,
                 const Eigen::Ref<const Eigen::VectorXd>& query, int k = 10,
                 Metric metric = Metric::kEuclidean);

// ---------------------------------------------------------------------------
// Gaussian naive Bayes

inline constexpr double kVarianceFloor = 1e-9;

class GaussianNaiveBayes {
 public:
  /// Every class in [0, n_classes) needs at least one sample.
  static GaussianNaiveBayes fit(const Eigen::MatrixXd& rows, const std::vector<int>& labels, int n_classes);

  int classify(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  std::vector<int> classify_rows(const Eigen::MatrixXd& rows) const;
  Eigen::VectorXd log_posterior(const Eigen::Ref<const Eigen::VectorXd>& x) const;

  const Eigen::MatrixXd& means() const { return means_; }
  const Eigen::MatrixXd& variances() const { return variances_; }

 private:
  Eigen::VectorXd log_priors_;
  Eigen::MatrixXd means_;      // classes × features
  Eigen::MatrixXd variances_;  // classes × features
};

// ---------------------------------------------------------------------------
// Ordinary least squares

/// Intercept is appended internally. Solved with a complete orthogonal
/// decomposition, so rank-deficient designs get the minimum-norm solution.
class LinearRegression {
 public:
  static LinearRegression fit(const Eigen::MatrixXd& rows, const Eigen::VectorXd& targets);

  double predict(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  Eigen::VectorXd predict_rows(const Eigen::MatrixXd& rows) const;

  const Eigen::VectorXd& coefficients() const { return coefficients_; }
  double intercept() const { return intercept_; }

 private:
  Eigen::VectorXd coefficients_;
  double intercept_ = 0.0;
};

// ---------------------------------------------------------------------------
// k-means

struct KMeansOptions {
  int restarts = 10;
  int max_iterations = 100;
  bool standardize = true;
  std::uint64_t seed = 0;
};

struct KMeansResult {
  Eigen::MatrixXd centroids;  // k × dims, in the input space
  std::vector<int> labels;
  double inertia = 0.0;  // within-cluster sum of squares in the clustering space
  /// Inertia after every Lloyd assignment step of the winning restart.
  std::vector<double> inertia_history;
};

/// k-means++ seeding, Lloyd iterations until assignments stop changing (or
/// max_iterations), best of `restarts` by inertia. Empty clusters are reseeded
/// at the point farthest from its centroid.
KMeansResult kmeans(const Eigen::MatrixXd& points, int k, const KMeansOptions& options = {});

enum class BmiClassMode { kBmi, kAgeBmi, kWeightHeight };

BmiClassMode bmi_class_mode_from_string(const std::string& name);
std::string to_string(BmiClassMode mode);

inline constexpr int kBmiClassCount = 5;

/// Clusters subjects into five ordinal BMI classes (0 = lowest mean BMI).
std::map<std::string, int> build_bmi_classes(const std::vector<SubjectRecord>& subjects,
                                             BmiClassMode mode = BmiClassMode::kWeightHeight,
                                             const KMeansOptions& options = {});

}  // namespace bedsense::baselines
