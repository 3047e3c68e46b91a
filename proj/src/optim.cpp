#include "bedsense/optim.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <optional>

namespace bedsense::optim {

std::string to_string(StopReason reason) {
  switch (reason) {
    case StopReason::kMaxIterations: return "max_iterations";
    case StopReason::kGradientNorm: return "gradient_norm";
    case StopReason::kRelativeLoss: return "relative_loss";
    case StopReason::kLineSearchFailed: return "line_search_failed";
  }
  return "unknown";
}

namespace {

struct Probe {
  double step = 0.0;
  double f = 0.0;
  double slope = 0.0;  // directional derivative
  Eigen::VectorXd x;
  Eigen::VectorXd g;
};

class LineFunction {
 public:
  LineFunction(const Objective& objective, const Eigen::VectorXd& x0, const Eigen::VectorXd& dir,
               int& evaluations)
      : objective_(objective), x0_(x0), dir_(dir), evaluations_(evaluations) {}

  Probe at(double step) const {
    Probe p;
    p.step = step;
    p.x = x0_ + step * dir_;
    p.g.resize(p.x.size());
    p.f = objective_(p.x, p.g);
    p.slope = p.g.dot(dir_);
    ++evaluations_;
    return p;
  }

 private:
  const Objective& objective_;
  const Eigen::VectorXd& x0_;
  const Eigen::VectorXd& dir_;
  int& evaluations_;
};

// Minimizer of the cubic through (a, fa, da) and (b, fb, db); nullopt if the
// cubic has no real minimizer.
std::optional<double> cubic_minimizer(double a, double fa, double da, double b, double fb, double db) {
  const double d1 = da + db - 3.0 * (fa - fb) / (a - b);
  const double disc = d1 * d1 - da * db;
  if (disc < 0.0) return std::nullopt;
  const double d2 = std::copysign(std::sqrt(disc), b - a);
  const double denom = db - da + 2.0 * d2;
  if (denom == 0.0) return std::nullopt;
  const double t = b - (b - a) * (db + d2 - d1) / denom;
  if (!std::isfinite(t)) return std::nullopt;
  return t;
}

std::optional<Probe> zoom(const LineFunction& phi, double f0, double slope0, Probe lo, Probe hi,
                          const LbfgsOptions& opt, int budget) {
  for (int i = 0; i < budget; ++i) {
    const double left = std::min(lo.step, hi.step);
    const double right = std::max(lo.step, hi.step);
    const double width = right - left;
    if (width <= 1e-16 * std::max(1.0, right)) return std::nullopt;
    double step = 0.5 * (lo.step + hi.step);
    if (auto c = cubic_minimizer(lo.step, lo.f, lo.slope, hi.step, hi.f, hi.slope)) {
      // Keep the trial point away from the bracket ends.
      if (*c > left + 0.1 * width && *c < right - 0.1 * width) step = *c;
    }
    Probe trial = phi.at(step);
    if (!std::isfinite(trial.f) || trial.f > f0 + opt.c1 * step * slope0 || trial.f >= lo.f) {
      hi = std::move(trial);
      continue;
    }
    if (std::abs(trial.slope) <= -opt.c2 * slope0) return trial;
    if (trial.slope * (hi.step - lo.step) >= 0.0) hi = lo;
    lo = std::move(trial);
  }
  return std::nullopt;
}

std::optional<Probe> strong_wolfe(const LineFunction& phi, double f0, double slope0, double initial_step,
                                  const LbfgsOptions& opt) {
  Probe prev;
  prev.step = 0.0;
  prev.f = f0;
  prev.slope = slope0;
  double step = initial_step;
  int used = 0;
  for (; used < opt.max_line_search_evaluations; ++used) {
    Probe cur = phi.at(step);
    const int remaining = opt.max_line_search_evaluations - used - 1;
    if (!std::isfinite(cur.f) || cur.f > f0 + opt.c1 * step * slope0 || (used > 0 && cur.f >= prev.f)) {
      return zoom(phi, f0, slope0, std::move(prev), std::move(cur), opt, remaining);
    }
    if (std::abs(cur.slope) <= -opt.c2 * slope0) return cur;
    if (cur.slope >= 0.0) return zoom(phi, f0, slope0, std::move(cur), std::move(prev), opt, remaining);
    prev = std::move(cur);
    step *= 2.0;
  }
  return std::nullopt;
}

// Armijo backtracking along -g.
std::optional<Probe> steepest_descent_step(const LineFunction& phi, double f0, double slope0,
                                           double initial_step, const LbfgsOptions& opt) {
  double step = initial_step;
  for (int i = 0; i < 60; ++i) {
    Probe p = phi.at(step);
    if (std::isfinite(p.f) && p.f <= f0 + opt.c1 * step * slope0 && p.f < f0) return p;
    step *= 0.5;
  }
  return std::nullopt;
}

bool relative_change_small(double f_old, double f_new, double tol) {
  const double scale = std::max({std::abs(f_old), std::abs(f_new), 1.0});
  return (f_old - f_new) / scale <= tol;
}

}  // namespace

Result minimize_lbfgs(const Objective& objective, Eigen::VectorXd x0, const LbfgsOptions& opt) {
  Result res;
  res.x = std::move(x0);
  Eigen::VectorXd g(res.x.size());
  res.loss = objective(res.x, g);
  res.evaluations = 1;
  res.loss_history.push_back(res.loss);
  res.gradient_norm = g.norm();

  std::deque<Eigen::VectorXd> s_hist, y_hist;
  std::deque<double> rho_hist;
  const int memory = std::max(1, opt.memory);

  while (true) {
    if (res.gradient_norm < opt.gradient_tolerance) {
      res.reason = StopReason::kGradientNorm;
      break;
    }
    if (res.iterations >= opt.max_iterations) {
      res.reason = StopReason::kMaxIterations;
      break;
    }

    // Two-loop recursion.
    Eigen::VectorXd q = g;
    const std::size_t m = s_hist.size();
    std::vector<double> alpha(m);
    for (std::size_t i = m; i-- > 0;) {
      alpha[i] = rho_hist[i] * s_hist[i].dot(q);
      q.noalias() -= alpha[i] * y_hist[i];
    }
    if (m > 0) q *= s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
    for (std::size_t i = 0; i < m; ++i) {
      const double beta = rho_hist[i] * y_hist[i].dot(q);
      q.noalias() += (alpha[i] - beta) * s_hist[i];
    }
    Eigen::VectorXd dir = -q;
    double slope0 = g.dot(dir);
    if (!(slope0 < 0.0)) {
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
      dir = -g;
      slope0 = -g.squaredNorm();
    }
    const double initial_step = s_hist.empty() ? std::min(1.0, 1.0 / g.norm()) : 1.0;

    const LineFunction phi(objective, res.x, dir, res.evaluations);
    std::optional<Probe> accepted = strong_wolfe(phi, res.loss, slope0, initial_step, opt);
    if (!accepted) {
      res.events.push_back("iteration " + std::to_string(res.iterations + 1) +
                           ": line search failed, steepest-descent fallback");
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
      dir = -g;
      const LineFunction sd(objective, res.x, dir, res.evaluations);
      accepted = steepest_descent_step(sd, res.loss, -g.squaredNorm(), std::min(1.0, 1.0 / g.norm()), opt);
      if (!accepted) {
        res.events.push_back("iteration " + std::to_string(res.iterations + 1) +
                             ": steepest-descent fallback made no progress");
        res.reason = StopReason::kLineSearchFailed;
        break;
      }
    }

    Eigen::VectorXd s = accepted->x - res.x;
    Eigen::VectorXd y = accepted->g - g;
    const double sy = s.dot(y);
    const double f_old = res.loss;
    res.x = std::move(accepted->x);
    g = std::move(accepted->g);
    res.loss = accepted->f;
    res.gradient_norm = g.norm();
    ++res.iterations;
    res.loss_history.push_back(res.loss);

    if (sy > 1e-12 * y.squaredNorm() && sy > 0.0) {
      s_hist.push_back(std::move(s));
      y_hist.push_back(std::move(y));
      rho_hist.push_back(1.0 / sy);
      if (static_cast<int>(s_hist.size()) > memory) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    }
    if (relative_change_small(f_old, res.loss, opt.relative_loss_tolerance)) {
      res.reason = StopReason::kRelativeLoss;
      break;
    }
  }
  return res;
}

Result minimize_adam(const Objective& objective, Eigen::VectorXd x0, const AdamOptions& opt) {
  Result res;
  res.x = std::move(x0);
  Eigen::VectorXd g(res.x.size());
  Eigen::VectorXd m = Eigen::VectorXd::Zero(res.x.size());
  Eigen::VectorXd v = Eigen::VectorXd::Zero(res.x.size());
  res.loss = objective(res.x, g);
  res.evaluations = 1;
  res.loss_history.push_back(res.loss);
  res.gradient_norm = g.norm();
  double b1t = 1.0, b2t = 1.0;
  while (true) {
    if (res.gradient_norm < opt.gradient_tolerance) {
      res.reason = StopReason::kGradientNorm;
      break;
    }
    if (res.iterations >= opt.max_iterations) {
      res.reason = StopReason::kMaxIterations;
      break;
    }
    b1t *= opt.beta1;
    b2t *= opt.beta2;
    m = opt.beta1 * m + (1.0 - opt.beta1) * g;
    v = opt.beta2 * v + (1.0 - opt.beta2) * g.cwiseProduct(g);
    const double lr = opt.learning_rate * std::sqrt(1.0 - b2t) / (1.0 - b1t);
    res.x.array() -= lr * m.array() / (v.array().sqrt() + opt.epsilon);
    const double f_old = res.loss;
    res.loss = objective(res.x, g);
    ++res.evaluations;
    ++res.iterations;
    res.gradient_norm = g.norm();
    res.loss_history.push_back(res.loss);
    if (std::abs(f_old - res.loss) / std::max({std::abs(f_old), std::abs(res.loss), 1.0}) <
        opt.relative_loss_tolerance) {
      res.reason = StopReason::kRelativeLoss;
      break;
    }
  }
  return res;
}

}  // namespace bedsense::optim
