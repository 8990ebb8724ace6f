#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "floodaid/layers.hpp"

namespace floodaid {

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;  // L2 term added to the gradient before the moments
};

// Adam with bias correction. Moment buffers are allocated per registered
// parameter in registration order.
class Adam {
 public:
  Adam(std::vector<Parameter*> params, AdamOptions options);

  void step();

  double lr() const { return options_.lr; }
  void set_lr(double lr) { options_.lr = lr; }
  std::int64_t step_count() const { return step_; }
  const AdamOptions& options() const { return options_; }

 private:
  std::vector<Parameter*> params_;
  std::vector<std::vector<double>> first_moment_;
  std::vector<std::vector<double>> second_moment_;
  AdamOptions options_;
  std::int64_t step_ = 0;
};

struct PlateauOptions {
  double factor = 0.5;
  int patience = 10;
  double threshold = 1e-4;  // relative improvement required, mode "min"
  double min_lr = 0.0;
};

// Halves (by `factor`) the learning rate once the monitored value has failed
// to improve for `patience` consecutive steps. The bad-step counter resets
// after each reduction.
class PlateauScheduler {
 public:
  PlateauScheduler(double initial_lr, PlateauOptions options = {});

  // Feeds one monitored value, returns the learning rate to use next.
  double step(double monitored);

  double lr() const { return lr_; }
  double best() const { return best_; }
  int bad_steps() const { return bad_steps_; }
  const std::vector<double>& history() const { return history_; }

 private:
  PlateauOptions options_;
  double lr_;
  double best_ = std::numeric_limits<double>::infinity();
  int bad_steps_ = 0;
  std::vector<double> history_;
};

}  // namespace floodaid
