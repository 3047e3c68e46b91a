#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "bedsense/feature_mask.hpp"
#include "bedsense/optim.hpp"

namespace bedsense::mtnet {

/// Hidden widths of the shared trunk.
inline const std::vector<int> kDefaultHidden = {64, 128, 256, 256, 256};

/// Clamp applied to the target probability inside the cross-entropy log.
inline constexpr double kProbabilityFloor = 1e-12;

struct Architecture {
  int input_dim = static_cast<int>(kFeatureCount);
  std::vector<int> hidden = kDefaultHidden;
  int n_subjects = 2;

  bool operator==(const Architecture&) const = default;
};

/// Shared tanh trunk with a softmax identity head and an affine BMI head.
/// Parameters live in one flat vector so optimizers can work on it directly:
/// for each layer, the weight matrix (column-major, out × in) then the bias.
/// Layer order is trunk layers, identity head, BMI head.
class Network {
 public:
  struct Layer {
    int rows = 0;  // outputs
    int cols = 0;  // inputs
    Eigen::Index weight_offset = 0;
    Eigen::Index bias_offset = 0;
  };

  Network() = default;
  explicit Network(Architecture arch);

  const Architecture& architecture() const { return arch_; }
  const std::vector<Layer>& layers() const { return layers_; }
  Eigen::Index parameter_count() const { return params_.size(); }

  Eigen::VectorXd& parameters() { return params_; }
  const Eigen::VectorXd& parameters() const { return params_; }

  /// True for coordinates that belong to a weight matrix (not a bias).
  std::vector<bool> weight_coordinates() const;

  /// Glorot-uniform weights (±sqrt(6/(fan_in+fan_out))), zero biases.
  void initialize(std::uint64_t seed);

 private:
  Architecture arch_;
  std::vector<Layer> layers_;
  Eigen::VectorXd params_;
};

/// Column-major batch: inputs are features × samples (already normalized).
struct Batch {
  Eigen::MatrixXd inputs;
  std::vector<int> identities;
  Eigen::VectorXd bmi;

  Eigen::Index size() const { return inputs.cols(); }
};

struct BatchOutput {
  Eigen::MatrixXd identity_probs;  // n_subjects × samples
  Eigen::VectorXd bmi;             // samples
  Eigen::MatrixXd last_hidden;     // width of last trunk layer × samples
};

BatchOutput forward_batch(const Network& net, const Eigen::VectorXd& params, const Eigen::MatrixXd& inputs);

double loss_subject(std::span<const double> probs, int true_identity);
double loss_bmi(double estimate, double true_bmi);

/// Mean over the batch of (loss_subject + loss_bmi) plus
/// weight_decay · Σ w² over weight matrices (biases excluded).
double loss_total(const Network& net, const Eigen::VectorXd& params, const Batch& batch, double weight_decay);

/// loss_total and its exact gradient with respect to the flat parameters.
double loss_and_gradient(const Network& net, const Eigen::VectorXd& params, const Batch& batch,
                         double weight_decay, Eigen::VectorXd& gradient);

/// Per-feature z-score statistics fitted on training rows. Zero spreads are
/// replaced by 1 so constant features map to 0.
struct Normalizer {
  Eigen::VectorXd mean;
  Eigen::VectorXd stddev;

  static Normalizer fit(const Eigen::MatrixXd& rows);  // samples × features
  Eigen::MatrixXd normalize(const Eigen::MatrixXd& rows) const;
  Eigen::MatrixXd denormalize(const Eigen::MatrixXd& rows) const;
};

enum class OptimizerKind { kLbfgs, kAdaptive };

struct TrainConfig {
  int max_iterations = 14500;
  double weight_decay = 1e-4;
  OptimizerKind optimizer = OptimizerKind::kLbfgs;
  int lbfgs_memory = 10;
  double gradient_tolerance = 1e-6;
  double relative_loss_tolerance = 1e-10;
  double adam_learning_rate = 1e-3;
  std::vector<int> hidden = kDefaultHidden;
  std::uint64_t seed = 0;
};

nlohmann::ordered_json to_json(const TrainConfig& config);
TrainConfig train_config_from_json(const nlohmann::ordered_json& j);

/// Raw training rows (samples × features, already masked), subject class
/// indices in [0, n_subjects) and BMI targets.
struct TrainingData {
  Eigen::MatrixXd features;
  std::vector<int> identities;
  Eigen::VectorXd bmi;
  int n_subjects = 0;
};

struct MultitaskModel {
  Network network;
  Normalizer normalizer;
  FeatureMask mask = full_feature_mask();
  std::vector<std::string> subject_ids;
  TrainConfig config;
  nlohmann::ordered_json provenance = nlohmann::ordered_json::object();
};

struct MultitaskOutput {
  std::vector<double> identity_probs;
  double bmi_estimate = 0.0;
};

struct TrainResult {
  MultitaskModel model;
  optim::Result optimizer;  // x is left empty; parameters live in model
};

/// Full-batch training. Inputs are z-scored with statistics of `data`.
TrainResult train(const TrainingData& data, const TrainConfig& config);

/// Single sample of raw (masked, unnormalized) features.
MultitaskOutput forward(const MultitaskModel& model, std::span<const double> raw_features);

struct Predictions {
  std::vector<int> identity;       // argmax class, ties to the lower index
  Eigen::MatrixXd identity_probs;  // samples × subjects
  Eigen::VectorXd bmi;
};

Predictions predict(const MultitaskModel& model, const Eigen::MatrixXd& raw_rows);

/// Activations of the last trunk layer, samples × width.
Eigen::MatrixXd last_hidden_features(const MultitaskModel& model, const Eigen::MatrixXd& raw_rows);

/// Multinomial logistic regression on last-trunk-layer activations.
struct BmiClassHead {
  Eigen::MatrixXd weights;  // classes × width
  Eigen::VectorXd bias;     // classes
  optim::Result optimizer;

  int n_classes() const { return static_cast<int>(weights.rows()); }
  std::vector<int> predict_features(const Eigen::MatrixXd& activations) const;  // samples × width
  std::vector<int> predict(const MultitaskModel& model, const Eigen::MatrixXd& raw_rows) const;
};

/// Fits a logistic head on fixed activations (samples × width). Every class in
/// [0, n_classes) must occur; otherwise DomainError names the missing class.
BmiClassHead fit_logistic_head(const Eigen::MatrixXd& activations, const std::vector<int>& labels,
                               int n_classes, double weight_decay, int max_iterations = 5000);

BmiClassHead fit_bmi_class_head(const MultitaskModel& model, const Eigen::MatrixXd& raw_rows,
                                const std::vector<int>& class_labels, int n_classes = 5,
                                int max_iterations = 5000);

nlohmann::ordered_json to_json(const MultitaskModel& model);
MultitaskModel model_from_json(const nlohmann::ordered_json& j);

void save_model(const MultitaskModel& model, const std::filesystem::path& path);
/// Throws LoadError if the file is malformed or its feature mask differs from
/// `expected_mask`.
MultitaskModel load_model(const std::filesystem::path& path,
                          std::optional<FeatureMask> expected_mask = std::nullopt);

}  // namespace bedsense::mtnet
