#include "ser/nn/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "ser/error.hpp"

namespace ser::nn {

double relative_error(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
  return std::abs(analytic - numeric) / denom;
}

GradCheckResult finite_diff_check(const ScalarFunction& f, std::span<const double> x,
                                  std::span<const double> analytic, double h) {
  if (analytic.size() != x.size()) throw ShapeError("finite_diff_check: gradient size mismatch");
  GradCheckResult r;
  std::vector<double> probe(x.begin(), x.end());
  for (std::size_t i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + h;
    const double up = f(probe);
    probe[i] = x[i] - h;
    const double down = f(probe);
    probe[i] = x[i];
    const double numeric = (up - down) / (2.0 * h);
    const double err = relative_error(analytic[i], numeric);
    if (err > r.max_rel_error || r.n_checked == 0) {
      r.max_rel_error = err;
      r.worst_index = i;
      r.worst_analytic = analytic[i];
      r.worst_numeric = numeric;
    }
    ++r.n_checked;
  }
  return r;
}

}  // namespace ser::nn
