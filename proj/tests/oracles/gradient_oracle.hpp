#pragma once
// Central finite differences of a scalar function of a parameter vector.

#include <functional>

#include <Eigen/Core>

namespace oracle {

inline double central_difference(const std::function<double(const Eigen::VectorXd&)>& f, Eigen::VectorXd x,
                                 Eigen::Index i, double h = 1e-5) {
  const double x0 = x(i);
  x(i) = x0 + h;
  const double up = f(x);
  x(i) = x0 - h;
  const double down = f(x);
  return (up - down) / (2.0 * h);
}

inline double relative_error(double analytic, double numeric) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
  return std::abs(analytic - numeric) / scale;
}

}  // namespace oracle
