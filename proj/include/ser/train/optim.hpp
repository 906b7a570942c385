#pragma once

#include <cstdint>
#include <limits>
#include <span>

#include "ser/nn/model.hpp"

namespace ser::train {

struct AdamState {
  nn::Gradients m;
  nn::Gradients v;
  std::uint64_t t = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

AdamState make_adam_state(const nn::ModelParams& params);

// One bias-corrected Adam update over a flat array.
void adam_update(std::span<double> w, std::span<const double> g, std::span<double> m, std::span<double> v,
                 std::uint64_t t, double lr, double beta1, double beta2, double eps);

// t += 1, then every trainable array is updated once.
void adam_step(nn::ModelParams& params, const nn::Gradients& grads, AdamState& state, double lr);

// Halves the learning rate once the monitored value has failed to improve
// strictly on its best for `patience` consecutive epochs; the count then restarts.
class PlateauScheduler {
 public:
  explicit PlateauScheduler(int patience);

  // Feed one epoch's monitored value; returns the learning rate to use next.
  double step(double monitored, double lr);

  int halvings() const { return halvings_; }

 private:
  int patience_;
  double best_ = std::numeric_limits<double>::infinity();
  int bad_epochs_ = 0;
  int halvings_ = 0;
};

// Learning rate after replaying a whole history through a fresh scheduler.
double lr_on_plateau(std::span<const double> history, double lr0, int patience);

}  // namespace ser::train
