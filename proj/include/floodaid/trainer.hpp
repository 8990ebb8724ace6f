#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "floodaid/dataset.hpp"
#include "floodaid/fairness.hpp"
#include "floodaid/model.hpp"
#include "floodaid/optim.hpp"

namespace floodaid {

struct TrainConfig {
  int epochs = 100;
  std::size_t batch_size = 32;
  double lr = 1e-3;
  double weight_decay = 1e-5;
  double lambda = 1.0;
  PlateauOptions scheduler{};
  std::uint64_t seed = 0;
  Variant variant = Variant::kFair;
  // Targets are divided by this before the task loss; predictions are
  // multiplied back, so metrics stay in USD M. 0 means the training-set SD.
  double target_scale = 0.0;
  // Start the task output at the mean scaled target instead of softplus(0).
  bool init_output_bias = true;
  // Architecture; num_groups and variant are filled in from the data and
  // the variant above.
  ModelConfig model{};

  void validate() const;
};

struct EpochLog {
  int epoch = 0;
  double task_loss = 0.0;
  double adv_loss = 0.0;
  double total_loss = 0.0;
  double lr = 0.0;  // rate used during this epoch
  double adv_accuracy = 0.0;
  double seconds = 0.0;  // wall clock, cumulative
};

struct TrainingLog {
  std::vector<EpochLog> epochs;
  std::size_t parameter_count = 0;
  std::size_t steps = 0;
};

struct TrainResult {
  FairModel model;
  TrainingLog log;
  std::vector<std::string> training_ids;  // rows that contributed gradients
};

// Row batches for one epoch: shuffled order cut into batch_size chunks, a
// trailing chunk of one row merged into its predecessor.
std::vector<std::vector<std::size_t>> make_batches(std::size_t n, std::size_t batch_size,
                                                   RngStream& shuffle_rng);

// Fits standardization on `train_set`, builds the model and runs the fixed
// epoch budget with Adam and the plateau scheduler on epoch-mean task loss.
TrainResult train(const Dataset& train_set, const TrainConfig& config);

struct Evaluation {
  std::vector<double> predictions;
  PerformanceReport performance;
  FairnessReport fairness;
};

// Predicts once and derives every metric from those predictions.
Evaluation evaluate(FairModel& model, const Dataset& data);

}  // namespace floodaid
