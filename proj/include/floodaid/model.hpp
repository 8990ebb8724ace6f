#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "floodaid/dataset.hpp"
#include "floodaid/layers.hpp"
#include "floodaid/matrix.hpp"
#include "floodaid/optim.hpp"
#include "floodaid/rng.hpp"

namespace floodaid {

enum class Variant { kFair, kBaseline };

std::string_view variant_label(Variant v);
std::optional<Variant> parse_variant(std::string_view s);

struct ModelConfig {
  std::size_t input_dim = kNumFeatures;
  std::vector<std::size_t> encoder_widths{128, 128, 64};  // last entry = representation dim
  std::vector<std::size_t> task_hidden{128};               // followed by a 1-wide softplus output
  std::vector<std::size_t> adversary_hidden{128};          // followed by a K-wide logit layer
  std::size_t num_groups = 11;                             // K
  double dropout = 0.3;
  double bn_momentum = 0.1;
  double bn_epsilon = 1e-5;
  Variant variant = Variant::kFair;

  std::size_t representation_dim() const { return encoder_widths.back(); }
  void validate() const;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

// Encoder inputs beyond this magnitude are treated as unstandardized.
inline constexpr double kMaxStandardizedMagnitude = 20.0;

// Dense -> BatchNorm -> ReLU -> Dropout, repeated once per encoder width.
class Encoder {
 public:
  Encoder() = default;
  Encoder(const ModelConfig& config, RngStream& init_rng);

  Matrix forward(const Matrix& x, Mode mode, RngStream& dropout_rng);
  Matrix backward(const Matrix& grad_out);

  void collect(std::vector<Parameter*>& out);
  void freeze_dropout(bool frozen);

  struct Block {
    DenseLayer dense;
    BatchNormLayer norm;
    ReluLayer relu;
    DropoutLayer dropout;
  };
  std::vector<Block>& blocks() { return blocks_; }
  const std::vector<Block>& blocks() const { return blocks_; }

 private:
  std::vector<Block> blocks_;
};

// Dense layers with ReLU between them; optional softplus on the output.
class MlpHead {
 public:
  MlpHead() = default;
  MlpHead(const std::string& name, std::size_t in, const std::vector<std::size_t>& hidden,
          std::size_t out, bool softplus_output, RngStream& init_rng);

  Matrix forward(const Matrix& x);
  Matrix backward(const Matrix& grad_out);

  void collect(std::vector<Parameter*>& out);
  std::vector<DenseLayer>& layers() { return layers_; }
  const std::vector<DenseLayer>& layers() const { return layers_; }

 private:
  std::vector<DenseLayer> layers_;
  std::vector<ReluLayer> relus_;
  std::optional<SoftplusLayer> softplus_;
};

struct ForwardOutput {
  Matrix representation;
  Matrix predictions;  // N x 1, strictly positive
  Matrix logits;       // N x K; empty for the baseline
};

struct StepOutput {
  double task_loss = 0.0;
  double adv_loss = 0.0;
  double total_loss = 0.0;  // task_loss - lambda * adv_loss
  double adv_accuracy = 0.0;
  Matrix predictions;
};

// Encoder + task head, plus an adversarial district classifier reached
// through gradient reversal when the variant is kFair.
class FairModel {
 public:
  FairModel() = default;
  // Encoder and task head draw from the "init" stream, the adversary from
  // "adversary-init", so fair and baseline models built with one seed share
  // their encoder/task weights.
  FairModel(const ModelConfig& config, std::uint64_t seed);

  const ModelConfig& config() const { return config_; }
  bool has_adversary() const { return adversary_.has_value(); }

  ForwardOutput forward(const Matrix& x, Mode mode, RngStream& dropout_rng);
  // Inference-mode forward; deterministic.
  ForwardOutput infer(const Matrix& x);

  // Backpropagates task and adversarial gradients. The encoder receives the
  // task gradient plus the adversarial gradient scaled by -lambda.
  void backward(const Matrix& grad_predictions, const Matrix* grad_logits, double lambda);

  std::vector<Parameter*> parameters();
  std::vector<Parameter*> encoder_parameters();
  std::vector<Parameter*> task_parameters();
  std::vector<Parameter*> adversary_parameters();

  std::size_t parameter_count() const;
  std::size_t adversary_parameter_count() const;

  void freeze_dropout(bool frozen) { encoder_.freeze_dropout(frozen); }

  Encoder& encoder() { return encoder_; }
  MlpHead& task_head() { return task_head_; }
  std::optional<MlpHead>& adversary() { return adversary_; }

  // Embedded preprocessing used by predict().
  const std::optional<StandardizationParams>& standardization() const { return standardization_; }
  void set_standardization(StandardizationParams p) { standardization_ = std::move(p); }
  // predict() returns output_scale * task output.
  double output_scale() const { return output_scale_; }
  void set_output_scale(double s) { output_scale_ = s; }
  const std::vector<std::string>& district_labels() const { return district_labels_; }
  void set_district_labels(std::vector<std::string> labels) { district_labels_ = std::move(labels); }

  // Named tensors in checkpoint order: parameters and batch-norm running stats.
  struct TensorView {
    std::string name;
    std::size_t rows;
    std::size_t cols;
    bool trainable;
    std::span<double> data;
  };
  std::vector<TensorView> tensors();

 private:
  ModelConfig config_;
  Encoder encoder_;
  MlpHead task_head_;
  std::optional<MlpHead> adversary_;
  std::optional<StandardizationParams> standardization_;
  std::vector<std::string> district_labels_;
  double output_scale_ = 1.0;
};

// Forward + backward on one batch; parameter gradients are left in place.
StepOutput compute_gradients(FairModel& model, const Matrix& x, std::span<const double> y,
                             std::span<const int> groups, double lambda, RngStream& dropout_rng);

// compute_gradients followed by one optimizer step over every parameter.
StepOutput training_step(FairModel& model, const Matrix& x, std::span<const double> y,
                         std::span<const int> groups, double lambda, Adam& optimizer,
                         RngStream& dropout_rng);

// Standardizes with the embedded parameters and runs inference.
std::vector<double> predict(FairModel& model, const Dataset& data);

}  // namespace floodaid
