#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "bedsense/optim.hpp"

using namespace bedsense::optim;
using Eigen::VectorXd;

namespace {

double rosenbrock(const VectorXd& x, VectorXd& g) {
  double f = 0;
  g.setZero();
  for (Eigen::Index i = 0; i + 1 < x.size(); ++i) {
    const double a = x(i + 1) - x(i) * x(i);
    const double b = 1 - x(i);
    f += 100 * a * a + b * b;
    g(i) += -400 * x(i) * a - 2 * b;
    g(i + 1) += 200 * a;
  }
  return f;
}

}  // namespace

TEST_CASE("L-BFGS solves Rosenbrock") {
  VectorXd x0(6);
  x0 << -1.2, 1, -1.2, 1, -1.2, 1;
  LbfgsOptions opt;
  opt.max_iterations = 2000;
  opt.relative_loss_tolerance = 0.0;
  const Result r = minimize_lbfgs(rosenbrock, x0, opt);
  CHECK(r.reason != StopReason::kMaxIterations);
  CHECK(r.reason != StopReason::kLineSearchFailed);
  CHECK((r.x.array() - 1.0).abs().maxCoeff() < 1e-5);
  for (std::size_t i = 1; i < r.loss_history.size(); ++i) CHECK(r.loss_history[i] <= r.loss_history[i - 1]);
  CHECK(r.loss_history.size() == static_cast<std::size_t>(r.iterations) + 1);
}

TEST_CASE("L-BFGS minimizes a quadratic in few steps") {
  const int n = 20;
  VectorXd diag = VectorXd::LinSpaced(n, 1.0, 50.0);
  const Objective f = [&](const VectorXd& x, VectorXd& g) {
    g = diag.cwiseProduct(x);
    return 0.5 * x.dot(g);
  };
  LbfgsOptions opt;
  opt.relative_loss_tolerance = 0.0;
  const Result r = minimize_lbfgs(f, VectorXd::Ones(n), opt);
  CHECK(r.gradient_norm < 1e-6);
  CHECK(r.iterations < 60);
}

TEST_CASE("iteration cap is honoured") {
  LbfgsOptions opt;
  opt.max_iterations = 3;
  VectorXd x0(2);
  x0 << -1.2, 1;
  const Result r = minimize_lbfgs(rosenbrock, x0, opt);
  CHECK(r.iterations == 3);
  CHECK(r.reason == StopReason::kMaxIterations);
}

TEST_CASE("broken gradients trigger the steepest-descent fallback") {
  // The reported gradient points uphill, so no step can satisfy Armijo.
  const Objective f = [](const VectorXd& x, VectorXd& g) {
    g = -2.0 * x;
    return x.squaredNorm();
  };
  VectorXd x0(3);
  x0 << 1, 2, 3;
  const Result r = minimize_lbfgs(f, x0, LbfgsOptions{});
  CHECK(r.reason == StopReason::kLineSearchFailed);
  REQUIRE(r.events.size() == 2);
  CHECK(r.events[0].find("steepest-descent fallback") != std::string::npos);
  CHECK(r.x == x0);
}

TEST_CASE("Adam reduces a quadratic") {
  const Objective f = [](const VectorXd& x, VectorXd& g) {
    g = 2.0 * x;
    return x.squaredNorm();
  };
  AdamOptions opt;
  opt.max_iterations = 3000;
  opt.learning_rate = 0.05;
  const Result r = minimize_adam(f, VectorXd::Constant(4, 3.0), opt);
  CHECK(r.loss < 1e-6);
}

TEST_CASE("stop reasons have names") {
  CHECK(to_string(StopReason::kGradientNorm) == "gradient_norm");
  CHECK(to_string(StopReason::kLineSearchFailed) == "line_search_failed");
}
