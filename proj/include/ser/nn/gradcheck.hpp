#pragma once

#include <cstddef>
#include <functional>
#include <span>

namespace ser::nn {

// |a - n| / max(|a|, |n|, 1e-8)
double relative_error(double analytic, double numeric);

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t n_checked = 0;
};

using ScalarFunction = std::function<double(std::span<const double>)>;

// Central differences (f(x + h e_i) - f(x - h e_i)) / 2h against the analytic
// gradient, for every coordinate.
GradCheckResult finite_diff_check(const ScalarFunction& f, std::span<const double> x,
                                  std::span<const double> analytic, double h = 1e-5);

}  // namespace ser::nn
