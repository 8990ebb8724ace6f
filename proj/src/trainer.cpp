#include "floodaid/trainer.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

#include "floodaid/errors.hpp"

namespace floodaid {

void TrainConfig::validate() const {
  if (epochs <= 0) throw DataError("TrainConfig: epochs must be positive");
  if (batch_size < 2) throw DataError("TrainConfig: batch_size must be at least 2");
  if (!(lr > 0.0)) throw DataError("TrainConfig: lr must be positive");
  if (weight_decay < 0.0) throw DataError("TrainConfig: weight_decay must be non-negative");
  if (lambda < 0.0) throw DataError("TrainConfig: lambda must be non-negative");
}

std::vector<std::vector<std::size_t>> make_batches(std::size_t n, std::size_t batch_size,
                                                   RngStream& shuffle_rng) {
  const auto order = shuffle_rng.permutation(n);
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t start = 0; start < n; start += batch_size) {
    const std::size_t end = std::min(n, start + batch_size);
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                         order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  if (batches.size() > 1 && batches.back().size() == 1) {
    batches[batches.size() - 2].push_back(batches.back().front());
    batches.pop_back();
  }
  return batches;
}

TrainResult train(const Dataset& train_set, const TrainConfig& config) {
  config.validate();
  if (train_set.size() < 2) throw DataError("train: need at least 2 training rows");

  ModelConfig mc = config.model;
  mc.variant = config.variant;
  mc.num_groups = train_set.num_districts();
  mc.input_dim = kNumFeatures;

  const auto params = fit_standardization(train_set);
  const Matrix x_all = standardize(train_set.feature_matrix(), params);
  auto y_all = train_set.targets();
  double scale = config.target_scale;
  if (scale == 0.0) {
    double m = 0, v = 0;
    for (double y : y_all) m += y;
    m /= y_all.size();
    for (double y : y_all) v += (y - m) * (y - m);
    scale = std::sqrt(v / y_all.size());
    if (!(scale > 0.0)) scale = 1.0;  // constant targets
  }
  for (double& y : y_all) y /= scale;
  const auto s_all = train_set.district_indices();

  TrainResult result{FairModel(mc, config.seed), {}, train_set.ids()};
  FairModel& model = result.model;
  model.set_standardization(params);
  model.set_district_labels(train_set.district_labels());
  model.set_output_scale(scale);
  if (config.init_output_bias) {
    double m = 0;
    for (double y : y_all) m += y;
    m /= y_all.size();
    const double inv = m > 20 ? m : std::log(std::expm1(std::max(m, 1e-6)));
    model.task_head().layers().back().bias().value.fill(inv);
  }

  Adam optimizer(model.parameters(), AdamOptions{config.lr, 0.9, 0.999, 1e-8, config.weight_decay});
  PlateauScheduler scheduler(config.lr, config.scheduler);
  RngStream shuffle_rng(config.seed, streams::kShuffle);
  RngStream dropout_rng(config.seed, streams::kDropout);
  const double lambda = config.variant == Variant::kFair ? config.lambda : 0.0;

  result.log.parameter_count = model.parameter_count();
  const auto t0 = std::chrono::steady_clock::now();
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    EpochLog log;
    log.epoch = epoch;
    log.lr = optimizer.lr();
    double rows = 0.0;
    const auto batches = make_batches(train_set.size(), config.batch_size, shuffle_rng);
    for (std::size_t b = 0; b < batches.size(); ++b) {
      const auto& idx = batches[b];
      const Matrix x = gather_rows(x_all, idx);
      std::vector<double> y;
      std::vector<int> s;
      for (std::size_t i : idx) {
        y.push_back(y_all[i]);
        s.push_back(s_all[i]);
      }
      const StepOutput step = training_step(model, x, y, s, lambda, optimizer, dropout_rng);
      ++result.log.steps;
      if (!std::isfinite(step.task_loss) || !std::isfinite(step.adv_loss)) {
        std::ostringstream msg;
        msg << "non-finite loss at epoch " << epoch << ", step " << b + 1 << " (task "
            << step.task_loss << ", adversarial " << step.adv_loss << ")";
        throw NumericError(msg.str());
      }
      const double w = static_cast<double>(idx.size());
      log.task_loss += w * step.task_loss;
      log.adv_loss += w * step.adv_loss;
      log.adv_accuracy += w * step.adv_accuracy;
      rows += w;
    }
    log.task_loss /= rows;
    log.adv_loss /= rows;
    log.adv_accuracy /= rows;
    log.total_loss = log.task_loss - lambda * log.adv_loss;
    log.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.log.epochs.push_back(log);
    optimizer.set_lr(scheduler.step(log.task_loss));
  }
  return result;
}

Evaluation evaluate(FairModel& model, const Dataset& data) {
  Evaluation ev;
  ev.predictions = predict(model, data);
  const auto actual = data.targets();
  ev.performance = performance_metrics(actual, ev.predictions);
  ev.fairness = fairness_report(actual, ev.predictions, data.district_indices(),
                                data.district_labels(), data.haor_flags());
  return ev;
}

}  // namespace floodaid
