#pragma once

// Central finite-difference helpers for gradient checks.

#include <cstddef>
#include <functional>
#include <vector>

namespace test_support {

// Central difference d/dx_i f(x) for every coordinate of x.
inline std::vector<double> central_gradient(
    const std::function<double(const std::vector<double>&)>& f, std::vector<double> x,
    double h = 1e-6) {
  std::vector<double> grad(x.size(), 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = x[i];
    x[i] = saved + h;
    const double up = f(x);
    x[i] = saved - h;
    const double down = f(x);
    x[i] = saved;
    grad[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

// Relative error with an absolute floor so near-zero pairs compare sanely.
inline double relative_error(double a, double b, double floor = 1e-8) {
  const double scale = std::max({std::abs(a), std::abs(b), floor});
  return std::abs(a - b) / scale;
}

}  // namespace test_support
