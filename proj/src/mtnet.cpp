#include "bedsense/mtnet.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "bedsense/error.hpp"
#include "bedsense/rng.hpp"
#include "bedsense/textio.hpp"

namespace bedsense::mtnet {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using ordered_json = nlohmann::ordered_json;

namespace {

using ConstMatrixMap = Eigen::Map<const MatrixXd>;
using ConstVectorMap = Eigen::Map<const VectorXd>;
using MatrixMap = Eigen::Map<MatrixXd>;
using VectorMap = Eigen::Map<VectorXd>;

ConstMatrixMap weights_of(const Network::Layer& l, const VectorXd& p) {
  return ConstMatrixMap(p.data() + l.weight_offset, l.rows, l.cols);
}
ConstVectorMap bias_of(const Network::Layer& l, const VectorXd& p) {
  return ConstVectorMap(p.data() + l.bias_offset, l.rows);
}

// tanh via the vectorized exponential; absolute error stays near machine
// epsilon and saturates cleanly to ±1.
void tanh_in_place(MatrixXd& h) {
  h = 1.0 - 2.0 / ((2.0 * h.array()).exp() + 1.0);
}

struct Activations {
  std::vector<MatrixXd> hidden;  // trunk outputs, one per hidden layer
  MatrixXd logits;               // subjects × samples
  Eigen::RowVectorXd bmi;        // samples
};

Activations run_network(const Network& net, const VectorXd& p, const MatrixXd& inputs) {
  const auto& layers = net.layers();
  const std::size_t trunk = net.architecture().hidden.size();
  if (inputs.rows() != net.architecture().input_dim) {
    throw DomainError("network expects " + std::to_string(net.architecture().input_dim) +
                      " inputs, got " + std::to_string(inputs.rows()));
  }
  Activations a;
  a.hidden.resize(trunk);
  const MatrixXd* prev = &inputs;
  for (std::size_t l = 0; l < trunk; ++l) {
    MatrixXd& h = a.hidden[l];
    h.noalias() = weights_of(layers[l], p) * (*prev);
    h.colwise() += bias_of(layers[l], p);
    tanh_in_place(h);
    prev = &h;
  }
  const auto& id_head = layers[trunk];
  const auto& bmi_head = layers[trunk + 1];
  a.logits.noalias() = weights_of(id_head, p) * (*prev);
  a.logits.colwise() += bias_of(id_head, p);
  a.bmi.noalias() = weights_of(bmi_head, p) * (*prev);
  a.bmi.array() += bias_of(bmi_head, p)(0);
  return a;
}

// Column-wise log-sum-exp.
Eigen::RowVectorXd log_sum_exp(const MatrixXd& logits) {
  const Eigen::RowVectorXd peak = logits.colwise().maxCoeff();
  return peak.array() + (logits.rowwise() - peak).array().exp().colwise().sum().log();
}

MatrixXd softmax_columns(const MatrixXd& logits) {
  const Eigen::RowVectorXd peak = logits.colwise().maxCoeff();
  MatrixXd e = (logits.rowwise() - peak).array().exp();
  const Eigen::RowVectorXd total = e.colwise().sum();
  for (Index j = 0; j < e.cols(); ++j) e.col(j) /= total(j);
  return e;
}

double weight_penalty(const Network& net, const VectorXd& p) {
  double total = 0.0;
  for (const auto& l : net.layers()) total += weights_of(l, p).squaredNorm();
  return total;
}

void check_batch(const Network& net, const Batch& batch) {
  if (batch.size() == 0) throw DomainError("empty batch");
  if (static_cast<Index>(batch.identities.size()) != batch.size() || batch.bmi.size() != batch.size()) {
    throw DomainError("batch labels do not match sample count");
  }
  for (int id : batch.identities) {
    if (id < 0 || id >= net.architecture().n_subjects) throw DomainError("identity label out of range");
  }
}

std::vector<int> argmax_columns(const MatrixXd& m) {
  std::vector<int> out(static_cast<std::size_t>(m.cols()));
  for (Index j = 0; j < m.cols(); ++j) {
    Index best = 0;
    for (Index i = 1; i < m.rows(); ++i) {
      if (m(i, j) > m(best, j)) best = i;
    }
    out[static_cast<std::size_t>(j)] = static_cast<int>(best);
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------

Network::Network(Architecture arch) : arch_(std::move(arch)) {
  if (arch_.input_dim <= 0 || arch_.n_subjects <= 0 || arch_.hidden.empty()) {
    throw DomainError("invalid network architecture");
  }
  Index offset = 0;
  int fan_in = arch_.input_dim;
  auto add = [&](int rows, int cols) {
    if (rows <= 0) throw DomainError("layer widths must be positive");
    Layer l{rows, cols, offset, offset + static_cast<Index>(rows) * cols};
    offset = l.bias_offset + rows;
    layers_.push_back(l);
  };
  for (int width : arch_.hidden) {
    add(width, fan_in);
    fan_in = width;
  }
  add(arch_.n_subjects, fan_in);
  add(1, fan_in);
  params_ = VectorXd::Zero(offset);
}

std::vector<bool> Network::weight_coordinates() const {
  std::vector<bool> mask(static_cast<std::size_t>(params_.size()), false);
  for (const auto& l : layers_) {
    for (Index i = 0; i < static_cast<Index>(l.rows) * l.cols; ++i) {
      mask[static_cast<std::size_t>(l.weight_offset + i)] = true;
    }
  }
  return mask;
}

void Network::initialize(std::uint64_t seed) {
  Rng rng(seed);
  params_.setZero();
  for (const auto& l : layers_) {
    const double limit = std::sqrt(6.0 / (l.rows + l.cols));
    for (Index i = 0; i < static_cast<Index>(l.rows) * l.cols; ++i) {
      params_(l.weight_offset + i) = rng.uniform(-limit, limit);
    }
  }
}

BatchOutput forward_batch(const Network& net, const VectorXd& params, const MatrixXd& inputs) {
  Activations a = run_network(net, params, inputs);
  BatchOutput out;
  out.identity_probs = softmax_columns(a.logits);
  out.bmi = a.bmi.transpose();
  out.last_hidden = std::move(a.hidden.back());
  return out;
}

double loss_subject(std::span<const double> probs, int true_identity) {
  if (true_identity < 0 || static_cast<std::size_t>(true_identity) >= probs.size()) {
    throw DomainError("loss_subject: identity out of range");
  }
  return -std::log(std::max(probs[static_cast<std::size_t>(true_identity)], kProbabilityFloor));
}

double loss_bmi(double estimate, double true_bmi) {
  const double d = true_bmi - estimate;
  return 0.5 * d * d;
}

double loss_total(const Network& net, const VectorXd& params, const Batch& batch, double weight_decay) {
  check_batch(net, batch);
  const Activations a = run_network(net, params, batch.inputs);
  const Eigen::RowVectorXd lse = log_sum_exp(a.logits);
  const double max_ce = -std::log(kProbabilityFloor);
  double total = 0.0;
  for (Index j = 0; j < batch.size(); ++j) {
    const double ce = lse(j) - a.logits(batch.identities[static_cast<std::size_t>(j)], j);
    total += std::min(ce, max_ce) + loss_bmi(a.bmi(j), batch.bmi(j));
  }
  return total / static_cast<double>(batch.size()) + weight_decay * weight_penalty(net, params);
}

double loss_and_gradient(const Network& net, const VectorXd& params, const Batch& batch,
                         double weight_decay, VectorXd& gradient) {
  check_batch(net, batch);
  const auto& layers = net.layers();
  const std::size_t trunk = net.architecture().hidden.size();
  const Activations a = run_network(net, params, batch.inputs);
  const Index n = batch.size();
  const double inv_n = 1.0 / static_cast<double>(n);
  const double max_ce = -std::log(kProbabilityFloor);

  // Output-layer error terms, already scaled by 1/n.
  const Eigen::RowVectorXd lse = log_sum_exp(a.logits);
  MatrixXd d_logits = (a.logits.rowwise() - lse).array().exp();
  Eigen::RowVectorXd d_bmi(n);
  double data_loss = 0.0;
  for (Index j = 0; j < n; ++j) {
    const int t = batch.identities[static_cast<std::size_t>(j)];
    const double ce = lse(j) - a.logits(t, j);
    if (ce > max_ce) {
      d_logits.col(j).setZero();  // clamped: flat in the logits
      data_loss += max_ce;
    } else {
      d_logits(t, j) -= 1.0;
      data_loss += ce;
    }
    const double residual = a.bmi(j) - batch.bmi(j);
    data_loss += 0.5 * residual * residual;
    d_bmi(j) = residual * inv_n;
  }
  d_logits *= inv_n;

  gradient.resize(params.size());
  auto grad_w = [&](const Network::Layer& l) { return MatrixMap(gradient.data() + l.weight_offset, l.rows, l.cols); };
  auto grad_b = [&](const Network::Layer& l) { return VectorMap(gradient.data() + l.bias_offset, l.rows); };

  const MatrixXd& top = a.hidden.back();
  const auto& id_head = layers[trunk];
  const auto& bmi_head = layers[trunk + 1];
  grad_w(id_head).noalias() = d_logits * top.transpose();
  grad_w(id_head) += 2.0 * weight_decay * weights_of(id_head, params);
  grad_b(id_head) = d_logits.rowwise().sum();
  grad_w(bmi_head).noalias() = d_bmi * top.transpose();
  grad_w(bmi_head) += 2.0 * weight_decay * weights_of(bmi_head, params);
  grad_b(bmi_head)(0) = d_bmi.sum();

  MatrixXd d_hidden = weights_of(id_head, params).transpose() * d_logits;
  d_hidden.noalias() += weights_of(bmi_head, params).transpose() * d_bmi;
  for (std::size_t l = trunk; l-- > 0;) {
    const MatrixXd& h = a.hidden[l];
    const MatrixXd d_pre = d_hidden.array() * (1.0 - h.array().square());
    const MatrixXd& below = l == 0 ? batch.inputs : a.hidden[l - 1];
    grad_w(layers[l]).noalias() = d_pre * below.transpose();
    grad_w(layers[l]) += 2.0 * weight_decay * weights_of(layers[l], params);
    grad_b(layers[l]) = d_pre.rowwise().sum();
    if (l > 0) d_hidden.noalias() = weights_of(layers[l], params).transpose() * d_pre;
  }
  return data_loss * inv_n + weight_decay * weight_penalty(net, params);
}

// ---------------------------------------------------------------------------

Normalizer Normalizer::fit(const MatrixXd& rows) {
  if (rows.rows() == 0) throw DomainError("Normalizer::fit: no rows");
  Normalizer n;
  n.mean = rows.colwise().mean().transpose();
  n.stddev.resize(rows.cols());
  for (Index j = 0; j < rows.cols(); ++j) {
    const double var = (rows.col(j).array() - n.mean(j)).square().mean();
    const double sd = std::sqrt(var);
    n.stddev(j) = (sd > 0.0 && std::isfinite(sd)) ? sd : 1.0;
  }
  return n;
}

MatrixXd Normalizer::normalize(const MatrixXd& rows) const {
  if (rows.cols() != mean.size()) throw DomainError("normalize: feature count mismatch");
  return (rows.rowwise() - mean.transpose()).array().rowwise() / stddev.transpose().array();
}

MatrixXd Normalizer::denormalize(const MatrixXd& rows) const {
  if (rows.cols() != mean.size()) throw DomainError("denormalize: feature count mismatch");
  return (rows.array().rowwise() * stddev.transpose().array()).matrix().rowwise() + mean.transpose();
}

// ---------------------------------------------------------------------------

ordered_json to_json(const TrainConfig& c) {
  ordered_json j;
  j["max_iterations"] = c.max_iterations;
  j["weight_decay"] = c.weight_decay;
  j["optimizer"] = c.optimizer == OptimizerKind::kLbfgs ? "lbfgs" : "adaptive";
  j["lbfgs_memory"] = c.lbfgs_memory;
  j["gradient_tolerance"] = c.gradient_tolerance;
  j["relative_loss_tolerance"] = c.relative_loss_tolerance;
  j["adam_learning_rate"] = c.adam_learning_rate;
  j["hidden"] = c.hidden;
  j["seed"] = c.seed;
  return j;
}

TrainConfig train_config_from_json(const ordered_json& j) {
  TrainConfig c;
  c.max_iterations = j.at("max_iterations").get<int>();
  c.weight_decay = j.at("weight_decay").get<double>();
  const std::string opt = j.at("optimizer").get<std::string>();
  if (opt != "lbfgs" && opt != "adaptive") throw LoadError("unknown optimizer '" + opt + "'");
  c.optimizer = opt == "lbfgs" ? OptimizerKind::kLbfgs : OptimizerKind::kAdaptive;
  c.lbfgs_memory = j.at("lbfgs_memory").get<int>();
  c.gradient_tolerance = j.at("gradient_tolerance").get<double>();
  c.relative_loss_tolerance = j.at("relative_loss_tolerance").get<double>();
  c.adam_learning_rate = j.at("adam_learning_rate").get<double>();
  c.hidden = j.at("hidden").get<std::vector<int>>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

TrainResult train(const TrainingData& data, const TrainConfig& config) {
  const Index n = data.features.rows();
  if (n == 0) throw DomainError("train: no samples");
  if (static_cast<Index>(data.identities.size()) != n || data.bmi.size() != n) {
    throw DomainError("train: label count does not match sample count");
  }
  if (data.n_subjects < 1) throw DomainError("train: need at least one subject");
  if (!(config.weight_decay >= 0.0) || !(config.gradient_tolerance > 0.0) ||
      !(config.relative_loss_tolerance > 0.0) || config.max_iterations < 0) {
    throw DomainError("train: invalid configuration");
  }

  TrainResult result;
  MultitaskModel& model = result.model;
  model.config = config;
  model.normalizer = Normalizer::fit(data.features);
  model.network = Network(Architecture{static_cast<int>(data.features.cols()), config.hidden, data.n_subjects});
  model.network.initialize(config.seed);

  Batch batch;
  batch.inputs = model.normalizer.normalize(data.features).transpose();
  batch.identities = data.identities;
  batch.bmi = data.bmi;
  check_batch(model.network, batch);

  const Network& net = model.network;
  const optim::Objective objective = [&](const VectorXd& x, VectorXd& g) {
    return loss_and_gradient(net, x, batch, config.weight_decay, g);
  };
  if (config.optimizer == OptimizerKind::kLbfgs) {
    optim::LbfgsOptions opt;
    opt.max_iterations = config.max_iterations;
    opt.memory = config.lbfgs_memory;
    opt.gradient_tolerance = config.gradient_tolerance;
    opt.relative_loss_tolerance = config.relative_loss_tolerance;
    result.optimizer = optim::minimize_lbfgs(objective, net.parameters(), opt);
  } else {
    optim::AdamOptions opt;
    opt.max_iterations = config.max_iterations;
    opt.learning_rate = config.adam_learning_rate;
    opt.gradient_tolerance = config.gradient_tolerance;
    opt.relative_loss_tolerance = config.relative_loss_tolerance;
    result.optimizer = optim::minimize_adam(objective, net.parameters(), opt);
  }
  model.network.parameters() = std::move(result.optimizer.x);
  result.optimizer.x = VectorXd();
  return result;
}

MultitaskOutput forward(const MultitaskModel& model, std::span<const double> raw_features) {
  const Index dim = model.network.architecture().input_dim;
  if (static_cast<Index>(raw_features.size()) != dim) {
    throw DomainError("forward: expected " + std::to_string(dim) + " features, got " +
                      std::to_string(raw_features.size()));
  }
  MatrixXd row = Eigen::Map<const Eigen::RowVectorXd>(raw_features.data(), dim);
  if (model.normalizer.mean.size() == dim) row = model.normalizer.normalize(row);
  const BatchOutput out = forward_batch(model.network, model.network.parameters(), row.transpose());
  MultitaskOutput result;
  result.identity_probs.assign(out.identity_probs.data(), out.identity_probs.data() + out.identity_probs.size());
  result.bmi_estimate = out.bmi(0);
  return result;
}

Predictions predict(const MultitaskModel& model, const MatrixXd& raw_rows) {
  const BatchOutput out =
      forward_batch(model.network, model.network.parameters(), model.normalizer.normalize(raw_rows).transpose());
  Predictions p;
  p.identity = argmax_columns(out.identity_probs);
  p.identity_probs = out.identity_probs.transpose();
  p.bmi = out.bmi;
  return p;
}

MatrixXd last_hidden_features(const MultitaskModel& model, const MatrixXd& raw_rows) {
  const BatchOutput out =
      forward_batch(model.network, model.network.parameters(), model.normalizer.normalize(raw_rows).transpose());
  return out.last_hidden.transpose();
}

// ---------------------------------------------------------------------------

std::vector<int> BmiClassHead::predict_features(const MatrixXd& activations) const {
  MatrixXd logits = weights * activations.transpose();
  logits.colwise() += bias;
  return argmax_columns(logits);
}

std::vector<int> BmiClassHead::predict(const MultitaskModel& model, const MatrixXd& raw_rows) const {
  return predict_features(last_hidden_features(model, raw_rows));
}

BmiClassHead fit_logistic_head(const MatrixXd& activations, const std::vector<int>& labels, int n_classes,
                               double weight_decay, int max_iterations) {
  const Index n = activations.rows();
  const Index width = activations.cols();
  if (n == 0 || static_cast<Index>(labels.size()) != n) throw DomainError("fit_logistic_head: bad inputs");
  if (n_classes < 2) throw DomainError("fit_logistic_head: need at least 2 classes");
  std::vector<int> counts(static_cast<std::size_t>(n_classes), 0);
  for (int y : labels) {
    if (y < 0 || y >= n_classes) throw DomainError("fit_logistic_head: label out of range");
    ++counts[static_cast<std::size_t>(y)];
  }
  for (int k = 0; k < n_classes; ++k) {
    if (counts[static_cast<std::size_t>(k)] == 0) {
      throw DomainError("fit_logistic_head: class " + std::to_string(k) + " absent from training data");
    }
  }

  const MatrixXd x = activations.transpose();  // width × n
  const Index w_size = static_cast<Index>(n_classes) * width;
  const double inv_n = 1.0 / static_cast<double>(n);
  const optim::Objective objective = [&](const VectorXd& p, VectorXd& g) {
    const ConstMatrixMap w(p.data(), n_classes, width);
    const ConstVectorMap b(p.data() + w_size, n_classes);
    MatrixXd logits = w * x;
    logits.colwise() += b;
    const Eigen::RowVectorXd lse = log_sum_exp(logits);
    MatrixXd d = (logits.rowwise() - lse).array().exp();
    double loss = 0.0;
    for (Index j = 0; j < n; ++j) {
      const int t = labels[static_cast<std::size_t>(j)];
      loss += lse(j) - logits(t, j);
      d(t, j) -= 1.0;
    }
    d *= inv_n;
    MatrixMap gw(g.data(), n_classes, width);
    gw.noalias() = d * x.transpose();
    gw += 2.0 * weight_decay * w;
    VectorMap(g.data() + w_size, n_classes) = d.rowwise().sum();
    return loss * inv_n + weight_decay * w.squaredNorm();
  };

  optim::LbfgsOptions opt;
  opt.max_iterations = max_iterations;
  opt.gradient_tolerance = 1e-6;
  opt.relative_loss_tolerance = 1e-15;
  optim::Result r = optim::minimize_lbfgs(objective, VectorXd::Zero(w_size + n_classes), opt);

  BmiClassHead head;
  head.weights = ConstMatrixMap(r.x.data(), n_classes, width);
  head.bias = ConstVectorMap(r.x.data() + w_size, n_classes);
  r.x = VectorXd();
  head.optimizer = std::move(r);
  return head;
}

BmiClassHead fit_bmi_class_head(const MultitaskModel& model, const MatrixXd& raw_rows,
                                const std::vector<int>& class_labels, int n_classes, int max_iterations) {
  return fit_logistic_head(last_hidden_features(model, raw_rows), class_labels, n_classes,
                           model.config.weight_decay, max_iterations);
}

// ---------------------------------------------------------------------------

namespace {

constexpr const char* kModelFormat = "bedsense-mtnet";
constexpr int kModelVersion = 1;

ordered_json vector_json(const double* data, Index size) {
  ordered_json a = ordered_json::array();
  for (Index i = 0; i < size; ++i) a.push_back(data[i]);
  return a;
}

}  // namespace

ordered_json to_json(const MultitaskModel& model) {
  const Network& net = model.network;
  ordered_json j;
  j["format"] = kModelFormat;
  j["version"] = kModelVersion;
  ordered_json mask = ordered_json::array();
  for (std::size_t i = 0; i < kFeatureCount; ++i) mask.push_back(model.mask.test(i));
  j["feature_mask"] = mask;
  j["subject_ids"] = model.subject_ids;
  j["architecture"] = {{"input_dim", net.architecture().input_dim},
                       {"hidden", net.architecture().hidden},
                       {"n_subjects", net.architecture().n_subjects}};
  j["normalization"] = {{"mean", vector_json(model.normalizer.mean.data(), model.normalizer.mean.size())},
                        {"std", vector_json(model.normalizer.stddev.data(), model.normalizer.stddev.size())}};
  ordered_json layers = ordered_json::array();
  const auto& p = net.parameters();
  for (const auto& l : net.layers()) {
    ordered_json jl;
    jl["rows"] = l.rows;
    jl["cols"] = l.cols;
    jl["weights"] = vector_json(p.data() + l.weight_offset, static_cast<Index>(l.rows) * l.cols);
    jl["bias"] = vector_json(p.data() + l.bias_offset, l.rows);
    layers.push_back(jl);
  }
  j["layers"] = layers;
  j["train_config"] = to_json(model.config);
  if (!model.provenance.empty()) j["provenance"] = model.provenance;
  return j;
}

MultitaskModel model_from_json(const ordered_json& j) {
  try {
    if (j.at("format").get<std::string>() != kModelFormat) throw LoadError("not a bedsense model file");
    if (j.at("version").get<int>() != kModelVersion) throw LoadError("unsupported model version");
    MultitaskModel m;
    const auto& jm = j.at("feature_mask");
    if (jm.size() != kFeatureCount) throw LoadError("feature_mask must have 14 entries");
    for (std::size_t i = 0; i < kFeatureCount; ++i) m.mask.set(i, jm.at(i).get<bool>());
    m.subject_ids = j.at("subject_ids").get<std::vector<std::string>>();
    Architecture arch;
    arch.input_dim = j.at("architecture").at("input_dim").get<int>();
    arch.hidden = j.at("architecture").at("hidden").get<std::vector<int>>();
    arch.n_subjects = j.at("architecture").at("n_subjects").get<int>();
    if (static_cast<std::size_t>(arch.input_dim) != m.mask.count()) {
      throw LoadError("input dimension does not match feature mask");
    }
    if (static_cast<std::size_t>(arch.n_subjects) != m.subject_ids.size()) {
      throw LoadError("subject count does not match subject_ids");
    }
    m.network = Network(arch);
    const auto mean = j.at("normalization").at("mean").get<std::vector<double>>();
    const auto sd = j.at("normalization").at("std").get<std::vector<double>>();
    if (mean.size() != static_cast<std::size_t>(arch.input_dim) || sd.size() != mean.size()) {
      throw LoadError("normalization statistics have wrong length");
    }
    m.normalizer.mean = Eigen::Map<const VectorXd>(mean.data(), static_cast<Index>(mean.size()));
    m.normalizer.stddev = Eigen::Map<const VectorXd>(sd.data(), static_cast<Index>(sd.size()));
    if ((m.normalizer.stddev.array() <= 0.0).any()) throw LoadError("normalization std must be positive");
    const auto& jl = j.at("layers");
    const auto& layers = m.network.layers();
    if (jl.size() != layers.size()) throw LoadError("layer count mismatch");
    auto& p = m.network.parameters();
    for (std::size_t i = 0; i < layers.size(); ++i) {
      const auto w = jl[i].at("weights").get<std::vector<double>>();
      const auto b = jl[i].at("bias").get<std::vector<double>>();
      if (jl[i].at("rows").get<int>() != layers[i].rows || jl[i].at("cols").get<int>() != layers[i].cols ||
          w.size() != static_cast<std::size_t>(layers[i].rows) * layers[i].cols ||
          b.size() != static_cast<std::size_t>(layers[i].rows)) {
        throw LoadError("layer " + std::to_string(i) + " has wrong shape");
      }
      std::copy(w.begin(), w.end(), p.data() + layers[i].weight_offset);
      std::copy(b.begin(), b.end(), p.data() + layers[i].bias_offset);
    }
    if (!p.allFinite()) throw LoadError("non-finite parameters");
    m.config = train_config_from_json(j.at("train_config"));
    if (j.contains("provenance")) m.provenance = j.at("provenance");
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(std::string("malformed model: ") + e.what());
  } catch (const DomainError& e) {
    throw LoadError(std::string("malformed model: ") + e.what());
  }
}

void save_model(const MultitaskModel& model, const std::filesystem::path& path) {
  textio::write_file_atomic(path, to_json(model).dump() + "\n");
}

MultitaskModel load_model(const std::filesystem::path& path, std::optional<FeatureMask> expected_mask) {
  ordered_json j;
  try {
    j = ordered_json::parse(textio::read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(path.string() + ": " + e.what());
  }
  MultitaskModel m;
  try {
    m = model_from_json(j);
  } catch (const LoadError& e) {
    throw LoadError(path.string() + ": " + e.what());
  }
  if (expected_mask && *expected_mask != m.mask) {
    throw LoadError(path.string() + ": feature mask " + m.mask.to_string() + " does not match expected " +
                    expected_mask->to_string());
  }
  return m;
}

}  // namespace bedsense::mtnet
