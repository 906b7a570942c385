#include "ser/train/optim.hpp"

#include <cmath>

#include "ser/error.hpp"

namespace ser::train {

AdamState make_adam_state(const nn::ModelParams& params) {
  return AdamState{nn::zeros_like(params), nn::zeros_like(params)};
}

void adam_update(std::span<double> w, std::span<const double> g, std::span<double> m, std::span<double> v,
                 std::uint64_t t, double lr, double beta1, double beta2, double eps) {
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t));
  for (std::size_t i = 0; i < w.size(); ++i) {
    m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
    v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
    const double m_hat = m[i] / c1;
    const double v_hat = v[i] / c2;
    w[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
  }
}

void adam_step(nn::ModelParams& params, const nn::Gradients& grads, AdamState& state, double lr) {
  auto w = nn::trainable_arrays(params);
  auto g = nn::trainable_arrays(grads);
  auto m = nn::trainable_arrays(state.m);
  auto v = nn::trainable_arrays(state.v);
  if (w.size() != g.size() || w.size() != m.size()) throw ShapeError("adam_step: parameter layout mismatch");
  ++state.t;
  for (std::size_t k = 0; k < w.size(); ++k) {
    if (w[k].size() != g[k].size()) throw ShapeError("adam_step: gradient shape mismatch");
    adam_update(w[k], g[k], m[k], v[k], state.t, lr, state.beta1, state.beta2, state.eps);
  }
}

PlateauScheduler::PlateauScheduler(int patience) : patience_(patience) {
  if (patience < 1) throw RangeError("plateau patience must be >= 1");
}

double PlateauScheduler::step(double monitored, double lr) {
  if (monitored < best_) {
    best_ = monitored;
    bad_epochs_ = 0;
    return lr;
  }
  if (++bad_epochs_ >= patience_) {
    bad_epochs_ = 0;
    ++halvings_;
    return lr / 2.0;
  }
  return lr;
}

double lr_on_plateau(std::span<const double> history, double lr0, int patience) {
  PlateauScheduler sched(patience);
  double lr = lr0;
  for (double v : history) lr = sched.step(v, lr);
  return lr;
}

}  // namespace ser::train
