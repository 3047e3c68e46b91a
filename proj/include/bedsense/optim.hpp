#pragma once

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace bedsense::optim {

/// Returns f(x) and writes the gradient into `grad` (already sized like x).
using Objective = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd& grad)>;

enum class StopReason { kMaxIterations, kGradientNorm, kRelativeLoss, kLineSearchFailed };

std::string to_string(StopReason reason);

struct LbfgsOptions {
  int max_iterations = 14500;
  int memory = 10;
  double gradient_tolerance = 1e-6;
  double relative_loss_tolerance = 1e-10;
  double c1 = 1e-4;  // sufficient decrease
  double c2 = 0.9;   // curvature
  int max_line_search_evaluations = 40;
};

struct AdamOptions {
  int max_iterations = 14500;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double gradient_tolerance = 1e-6;
  double relative_loss_tolerance = 1e-10;
};

struct Result {
  Eigen::VectorXd x;
  double loss = 0.0;
  double gradient_norm = 0.0;
  int iterations = 0;
  int evaluations = 0;
  StopReason reason = StopReason::kMaxIterations;
  /// Loss at the initial point and after every accepted step.
  std::vector<double> loss_history;
  /// Human-readable notes, e.g. steepest-descent fallbacks.
  std::vector<std::string> events;
};

/// Limited-memory BFGS with a strong-Wolfe line search (bracketing plus
/// cubic-interpolation zoom). When the line search fails the iteration falls
/// back to a backtracking steepest-descent step and clears the curvature
/// history.
Result minimize_lbfgs(const Objective& objective, Eigen::VectorXd x0, const LbfgsOptions& options);

/// Full-batch Adam, for optimizer ablations.
Result minimize_adam(const Objective& objective, Eigen::VectorXd x0, const AdamOptions& options);

}  // namespace bedsense::optim
