#include "bedsense/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/QR>

#include "bedsense/error.hpp"
#include "bedsense/rng.hpp"

namespace bedsense::baselines {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

Metric metric_from_string(const std::string& name) {
  if (name == "euclidean") return Metric::kEuclidean;
  if (name == "cosine") return Metric::kCosine;
  if (name == "minkowski3" || name == "cubic") return Metric::kMinkowski3;
  throw DomainError("unknown distance metric '" + name + "'");
}

std::string to_string(Metric metric) {
  switch (metric) {
    case Metric::kEuclidean: return "euclidean";
    case Metric::kCosine: return "cosine";
    case Metric::kMinkowski3: return "minkowski3";
  }
  return "unknown";
}

double distance(Metric metric, const Eigen::Ref<const VectorXd>& a, const Eigen::Ref<const VectorXd>& b) {
  if (a.size() != b.size()) throw DomainError("distance: dimension mismatch");
  switch (metric) {
    case Metric::kEuclidean:
      return (a - b).norm();
    case Metric::kCosine: {
      const double na = a.norm();
      const double nb = b.norm();
      if (na == 0.0 || nb == 0.0) throw DomainError("cosine distance undefined for a zero vector");
      return 1.0 - a.dot(b) / (na * nb);
    }
    case Metric::kMinkowski3:
      return std::cbrt((a - b).array().abs().cube().sum());
  }
  return 0.0;
}

KnnClassifier::KnnClassifier(MatrixXd train_rows, std::vector<int> labels, int k, Metric metric)
    : train_(std::move(train_rows)), labels_(std::move(labels)), k_(k), metric_(metric) {
  if (static_cast<Index>(labels_.size()) != train_.rows()) throw DomainError("knn: label count mismatch");
  if (k_ < 1 || k_ > train_.rows()) throw DomainError("knn: k must be in [1, training size]");
  for (int y : labels_) {
    if (y < 0) throw DomainError("knn: labels must be non-negative");
  }
}

int KnnClassifier::classify(const Eigen::Ref<const VectorXd>& query) const {
  const Index n = train_.rows();
  std::vector<std::pair<double, Index>> d(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) d[static_cast<std::size_t>(i)] = {distance(metric_, train_.row(i).transpose(), query), i};
  std::partial_sort(d.begin(), d.begin() + k_, d.end());
  std::map<int, int> votes;
  for (int i = 0; i < k_; ++i) ++votes[labels_[static_cast<std::size_t>(d[static_cast<std::size_t>(i)].second)]];
  int best = -1, best_votes = 0;
  for (const auto& [label, count] : votes) {  // ascending label: ties keep the smaller id
    if (count > best_votes) {
      best = label;
      best_votes = count;
    }
  }
  return best;
}

std::vector<int> KnnClassifier::classify_rows(const MatrixXd& rows) const {
  std::vector<int> out(static_cast<std::size_t>(rows.rows()));
  for (Index i = 0; i < rows.rows(); ++i) out[static_cast<std::size_t>(i)] = classify(rows.row(i).transpose());
  return out;
}

int knn_classify(const MatrixXd& train_rows, const std::vector<int>& labels, const Eigen::Ref<const VectorXd>& query,
                 int k, Metric metric) {
  return KnnClassifier(train_rows, labels, k, metric).classify(query);
}

// ---------------------------------------------------------------------------

GaussianNaiveBayes GaussianNaiveBayes::fit(const MatrixXd& rows, const std::vector<int>& labels, int n_classes) {
  if (static_cast<Index>(labels.size()) != rows.rows()) throw DomainError("gnb: label count mismatch");
  if (n_classes < 1) throw DomainError("gnb: need at least one class");
  const Index dims = rows.cols();
  GaussianNaiveBayes m;
  m.means_ = MatrixXd::Zero(n_classes, dims);
  m.variances_ = MatrixXd::Zero(n_classes, dims);
  m.log_priors_ = VectorXd::Zero(n_classes);
  std::vector<Index> counts(static_cast<std::size_t>(n_classes), 0);
  for (Index i = 0; i < rows.rows(); ++i) {
    const int y = labels[static_cast<std::size_t>(i)];
    if (y < 0 || y >= n_classes) throw DomainError("gnb: label out of range");
    m.means_.row(y) += rows.row(i);
    ++counts[static_cast<std::size_t>(y)];
  }
  for (int c = 0; c < n_classes; ++c) {
    if (counts[static_cast<std::size_t>(c)] == 0) {
      throw DomainError("gnb: class " + std::to_string(c) + " has no samples");
    }
    m.means_.row(c) /= static_cast<double>(counts[static_cast<std::size_t>(c)]);
  }
  for (Index i = 0; i < rows.rows(); ++i) {
    const int y = labels[static_cast<std::size_t>(i)];
    m.variances_.row(y) += (rows.row(i) - m.means_.row(y)).array().square().matrix();
  }
  for (int c = 0; c < n_classes; ++c) {
    const double n = static_cast<double>(counts[static_cast<std::size_t>(c)]);
    m.variances_.row(c) = (m.variances_.row(c) / n).cwiseMax(kVarianceFloor);
    m.log_priors_(c) = std::log(n / static_cast<double>(rows.rows()));
  }
  return m;
}

VectorXd GaussianNaiveBayes::log_posterior(const Eigen::Ref<const VectorXd>& x) const {
  constexpr double kLog2Pi = 1.8378770664093453;
  VectorXd out = log_priors_;
  for (Index c = 0; c < means_.rows(); ++c) {
    const auto var = variances_.row(c).transpose().array();
    const auto diff = x.array() - means_.row(c).transpose().array();
    out(c) += -0.5 * (kLog2Pi + var.log() + diff.square() / var).sum();
  }
  return out;
}

int GaussianNaiveBayes::classify(const Eigen::Ref<const VectorXd>& x) const {
  const VectorXd lp = log_posterior(x);
  Index best = 0;
  for (Index c = 1; c < lp.size(); ++c) {
    if (lp(c) > lp(best)) best = c;
  }
  return static_cast<int>(best);
}

std::vector<int> GaussianNaiveBayes::classify_rows(const MatrixXd& rows) const {
  std::vector<int> out(static_cast<std::size_t>(rows.rows()));
  for (Index i = 0; i < rows.rows(); ++i) out[static_cast<std::size_t>(i)] = classify(rows.row(i).transpose());
  return out;
}

// ---------------------------------------------------------------------------

LinearRegression LinearRegression::fit(const MatrixXd& rows, const VectorXd& targets) {
  if (rows.rows() != targets.size() || rows.rows() == 0) throw DomainError("linreg: bad inputs");
  MatrixXd design(rows.rows(), rows.cols() + 1);
  design.leftCols(rows.cols()) = rows;
  design.col(rows.cols()).setOnes();
  const Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod(design);
  const VectorXd beta = cod.solve(targets);
  LinearRegression m;
  m.coefficients_ = beta.head(rows.cols());
  m.intercept_ = beta(rows.cols());
  return m;
}

double LinearRegression::predict(const Eigen::Ref<const VectorXd>& x) const {
  return coefficients_.dot(x) + intercept_;
}

VectorXd LinearRegression::predict_rows(const MatrixXd& rows) const {
  return (rows * coefficients_).array() + intercept_;
}

// ---------------------------------------------------------------------------

namespace {

struct Assignment {
  std::vector<int> labels;
  std::vector<double> sq_dist;
  double inertia = 0.0;
};

Assignment assign(const MatrixXd& x, const MatrixXd& centroids) {
  Assignment a;
  a.labels.resize(static_cast<std::size_t>(x.rows()));
  a.sq_dist.resize(static_cast<std::size_t>(x.rows()));
  for (Index i = 0; i < x.rows(); ++i) {
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (Index c = 0; c < centroids.rows(); ++c) {
      const double d = (x.row(i) - centroids.row(c)).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = static_cast<int>(c);
      }
    }
    a.labels[static_cast<std::size_t>(i)] = best;
    a.sq_dist[static_cast<std::size_t>(i)] = best_d;
    a.inertia += best_d;
  }
  return a;
}

MatrixXd seed_plus_plus(const MatrixXd& x, int k, Rng& rng) {
  const Index n = x.rows();
  MatrixXd centroids(k, x.cols());
  centroids.row(0) = x.row(static_cast<Index>(rng.below(static_cast<std::uint64_t>(n))));
  std::vector<double> d2(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) d2[static_cast<std::size_t>(i)] = (x.row(i) - centroids.row(0)).squaredNorm();
  for (int c = 1; c < k; ++c) {
    const double total = std::accumulate(d2.begin(), d2.end(), 0.0);
    Index pick = 0;
    if (total > 0.0) {
      double target = rng.uniform() * total;
      pick = n - 1;
      for (Index i = 0; i < n; ++i) {
        target -= d2[static_cast<std::size_t>(i)];
        if (target < 0.0 && d2[static_cast<std::size_t>(i)] > 0.0) {
          pick = i;
          break;
        }
      }
    } else {
      pick = static_cast<Index>(rng.below(static_cast<std::uint64_t>(n)));
    }
    centroids.row(c) = x.row(pick);
    for (Index i = 0; i < n; ++i) {
      d2[static_cast<std::size_t>(i)] = std::min(d2[static_cast<std::size_t>(i)], (x.row(i) - centroids.row(c)).squaredNorm());
    }
  }
  return centroids;
}

struct Run {
  MatrixXd centroids;
  std::vector<int> labels;
  double inertia = 0.0;
  std::vector<double> history;
};

Run lloyd(const MatrixXd& x, int k, int max_iterations, Rng& rng) {
  Run run;
  run.centroids = seed_plus_plus(x, k, rng);
  for (int it = 0; it < max_iterations; ++it) {
    Assignment a = assign(x, run.centroids);
    run.history.push_back(a.inertia);
    const bool stable = it > 0 && a.labels == run.labels;
    run.labels = std::move(a.labels);
    if (stable) break;
    MatrixXd sums = MatrixXd::Zero(k, x.cols());
    std::vector<int> counts(static_cast<std::size_t>(k), 0);
    for (Index i = 0; i < x.rows(); ++i) {
      sums.row(run.labels[static_cast<std::size_t>(i)]) += x.row(i);
      ++counts[static_cast<std::size_t>(run.labels[static_cast<std::size_t>(i)])];
    }
    std::vector<char> taken(static_cast<std::size_t>(x.rows()), 0);
    for (int c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] > 0) {
        run.centroids.row(c) = sums.row(c) / counts[static_cast<std::size_t>(c)];
        continue;
      }
      // Empty cluster: move it onto the worst-served point.
      Index far = -1;
      for (Index i = 0; i < x.rows(); ++i) {
        if (taken[static_cast<std::size_t>(i)]) continue;
        if (far < 0 || a.sq_dist[static_cast<std::size_t>(i)] > a.sq_dist[static_cast<std::size_t>(far)]) far = i;
      }
      if (far >= 0) {
        taken[static_cast<std::size_t>(far)] = 1;
        run.centroids.row(c) = x.row(far);
      }
    }
  }
  run.inertia = 0.0;
  for (Index i = 0; i < x.rows(); ++i) {
    run.inertia += (x.row(i) - run.centroids.row(run.labels[static_cast<std::size_t>(i)])).squaredNorm();
  }
  return run;
}

}  // namespace

KMeansResult kmeans(const MatrixXd& points, int k, const KMeansOptions& options) {
  if (k < 1) throw DomainError("kmeans: k must be positive");
  if (k > points.rows()) throw DomainError("kmeans: k exceeds the number of points");
  if (options.restarts < 1 || options.max_iterations < 1) throw DomainError("kmeans: invalid options");

  VectorXd mean = VectorXd::Zero(points.cols());
  VectorXd scale = VectorXd::Ones(points.cols());
  if (options.standardize) {
    mean = points.colwise().mean().transpose();
    for (Index j = 0; j < points.cols(); ++j) {
      const double sd = std::sqrt((points.col(j).array() - mean(j)).square().mean());
      if (sd > 0.0) scale(j) = sd;
    }
  }
  const MatrixXd x = (points.rowwise() - mean.transpose()).array().rowwise() / scale.transpose().array();

  Run best;
  bool have_best = false;
  for (int r = 0; r < options.restarts; ++r) {
    Rng rng(Rng::derive(options.seed, static_cast<std::uint64_t>(r)));
    Run run = lloyd(x, k, options.max_iterations, rng);
    if (!have_best || run.inertia < best.inertia) {
      best = std::move(run);
      have_best = true;
    }
  }
  KMeansResult result;
  result.centroids = (best.centroids.array().rowwise() * scale.transpose().array()).matrix().rowwise() + mean.transpose();
  result.labels = std::move(best.labels);
  result.inertia = best.inertia;
  result.inertia_history = std::move(best.history);
  return result;
}

BmiClassMode bmi_class_mode_from_string(const std::string& name) {
  if (name == "bmi") return BmiClassMode::kBmi;
  if (name == "age_bmi") return BmiClassMode::kAgeBmi;
  if (name == "weight_height") return BmiClassMode::kWeightHeight;
  throw DomainError("unknown BMI class mode '" + name + "'");
}

std::string to_string(BmiClassMode mode) {
  switch (mode) {
    case BmiClassMode::kBmi: return "bmi";
    case BmiClassMode::kAgeBmi: return "age_bmi";
    case BmiClassMode::kWeightHeight: return "weight_height";
  }
  return "unknown";
}

std::map<std::string, int> build_bmi_classes(const std::vector<SubjectRecord>& subjects, BmiClassMode mode,
                                             const KMeansOptions& options) {
  const Index n = static_cast<Index>(subjects.size());
  if (mode == BmiClassMode::kAgeBmi) {
    std::string missing;
    for (const auto& s : subjects) {
      if (!s.age_years) missing += (missing.empty() ? "" : ", ") + s.subject_id;
    }
    if (!missing.empty()) throw DomainError("age_bmi classes need ages; missing for: " + missing);
  }
  const Index dims = mode == BmiClassMode::kBmi ? 1 : 2;
  MatrixXd points(n, dims);
  for (Index i = 0; i < n; ++i) {
    const auto& s = subjects[static_cast<std::size_t>(i)];
    switch (mode) {
      case BmiClassMode::kBmi: points(i, 0) = s.bmi; break;
      case BmiClassMode::kAgeBmi: points.row(i) << *s.age_years, s.bmi; break;
      case BmiClassMode::kWeightHeight: points.row(i) << s.weight_kg, s.height_m; break;
    }
  }
  const KMeansResult km = kmeans(points, kBmiClassCount, options);

  std::vector<double> bmi_sum(kBmiClassCount, 0.0);
  std::vector<int> count(kBmiClassCount, 0);
  for (Index i = 0; i < n; ++i) {
    const int c = km.labels[static_cast<std::size_t>(i)];
    bmi_sum[static_cast<std::size_t>(c)] += subjects[static_cast<std::size_t>(i)].bmi;
    ++count[static_cast<std::size_t>(c)];
  }
  std::vector<int> order(kBmiClassCount);
  std::iota(order.begin(), order.end(), 0);
  for (int c = 0; c < kBmiClassCount; ++c) {
    if (count[static_cast<std::size_t>(c)] == 0) {
      throw DomainError("insufficient diversity: k-means produced an empty BMI class");
    }
  }
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return bmi_sum[static_cast<std::size_t>(a)] / count[static_cast<std::size_t>(a)] <
           bmi_sum[static_cast<std::size_t>(b)] / count[static_cast<std::size_t>(b)];
  });
  std::vector<int> rank(kBmiClassCount);
  for (int r = 0; r < kBmiClassCount; ++r) rank[static_cast<std::size_t>(order[static_cast<std::size_t>(r)])] = r;

  std::map<std::string, int> classes;
  for (Index i = 0; i < n; ++i) {
    classes[subjects[static_cast<std::size_t>(i)].subject_id] =
        rank[static_cast<std::size_t>(km.labels[static_cast<std::size_t>(i)])];
  }
  return classes;
}

}  // namespace bedsense::baselines
