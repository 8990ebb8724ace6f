#include "floodaid/optim.hpp"

#include <cmath>

#include "floodaid/errors.hpp"

namespace floodaid {

Adam::Adam(std::vector<Parameter*> params, AdamOptions options)
    : params_(std::move(params)), options_(options) {
  first_moment_.reserve(params_.size());
  second_moment_.reserve(params_.size());
  for (const Parameter* p : params_) {
    first_moment_.emplace_back(p->value.size(), 0.0);
    second_moment_.emplace_back(p->value.size(), 0.0);
  }
}

void Adam::step() {
  ++step_;
  const double t = static_cast<double>(step_);
  const double c1 = 1.0 - std::pow(options_.beta1, t);
  const double c2 = 1.0 - std::pow(options_.beta2, t);
  for (std::size_t k = 0; k < params_.size(); ++k) {
    Parameter& p = *params_[k];
    if (p.grad.size() != p.value.size()) {
      throw DataError("Adam: gradient shape does not match parameter " + p.name);
    }
    auto w = p.value.values();
    const auto g = p.grad.values();
    auto& m = first_moment_[k];
    auto& v = second_moment_[k];
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double gi = g[i] + options_.weight_decay * w[i];
      m[i] = options_.beta1 * m[i] + (1.0 - options_.beta1) * gi;
      v[i] = options_.beta2 * v[i] + (1.0 - options_.beta2) * gi * gi;
      const double m_hat = m[i] / c1;
      const double v_hat = v[i] / c2;
      w[i] -= options_.lr * m_hat / (std::sqrt(v_hat) + options_.eps);
    }
  }
}

PlateauScheduler::PlateauScheduler(double initial_lr, PlateauOptions options)
    : options_(options), lr_(initial_lr) {
  if (!(options_.factor > 0.0 && options_.factor < 1.0)) {
    throw DataError("PlateauScheduler: factor must lie in (0, 1)");
  }
  if (options_.patience < 0) throw DataError("PlateauScheduler: negative patience");
}

double PlateauScheduler::step(double monitored) {
  if (!std::isfinite(monitored)) throw NumericError("PlateauScheduler: monitored value is not finite");
  history_.push_back(monitored);
  if (monitored < best_ * (1.0 - options_.threshold)) {
    best_ = monitored;
    bad_steps_ = 0;
    return lr_;
  }
  if (++bad_steps_ >= options_.patience) {
    lr_ = std::max(lr_ * options_.factor, options_.min_lr);
    bad_steps_ = 0;
  }
  return lr_;
}

}  // namespace floodaid
