#include "floodaid/model.hpp"

#include <cmath>
#include <sstream>

#include "floodaid/errors.hpp"
#include "floodaid/losses.hpp"

namespace floodaid {

std::string_view variant_label(Variant v) { return v == Variant::kFair ? "fair" : "baseline"; }

std::optional<Variant> parse_variant(std::string_view s) {
  if (s == "fair") return Variant::kFair;
  if (s == "baseline") return Variant::kBaseline;
  return std::nullopt;
}

void ModelConfig::validate() const {
  auto bad = [](const std::string& what) { throw DataError("ModelConfig: " + what); };
  if (input_dim == 0) bad("input_dim must be positive");
  if (encoder_widths.empty()) bad("encoder needs at least one layer");
  for (auto w : encoder_widths)
    if (w == 0) bad("zero encoder width");
  for (auto w : task_hidden)
    if (w == 0) bad("zero task-head width");
  for (auto w : adversary_hidden)
    if (w == 0) bad("zero adversary width");
  if (variant == Variant::kFair && num_groups < 2) bad("the adversary needs at least 2 groups");
  if (!(dropout >= 0.0 && dropout < 1.0)) bad("dropout must lie in [0, 1)");
}

// ---------------------------------------------------------------------------

Encoder::Encoder(const ModelConfig& config, RngStream& init_rng) {
  std::size_t in = config.input_dim;
  for (std::size_t i = 0; i < config.encoder_widths.size(); ++i) {
    const std::size_t out = config.encoder_widths[i];
    const std::string name = "encoder." + std::to_string(i);
    Block b{DenseLayer(name + ".dense", in, out),
            BatchNormLayer(name + ".norm", out, config.bn_momentum, config.bn_epsilon),
            ReluLayer{}, DropoutLayer(config.dropout)};
    b.dense.init_he_uniform(init_rng);
    blocks_.push_back(std::move(b));
    in = out;
  }
}

Matrix Encoder::forward(const Matrix& x, Mode mode, RngStream& dropout_rng) {
  Matrix h = x;
  for (auto& b : blocks_) {
    h = b.dense.forward(h);
    h = b.norm.forward(h, mode);
    h = b.relu.forward(h);
    h = b.dropout.forward(h, mode, dropout_rng);
  }
  return h;
}

Matrix Encoder::backward(const Matrix& grad_out) {
  Matrix g = grad_out;
  for (auto it = blocks_.rbegin(); it != blocks_.rend(); ++it) {
    g = it->dropout.backward(g);
    g = it->relu.backward(g);
    g = it->norm.backward(g);
    g = it->dense.backward(g);
  }
  return g;
}

void Encoder::collect(std::vector<Parameter*>& out) {
  for (auto& b : blocks_) {
    out.push_back(&b.dense.weight());
    out.push_back(&b.dense.bias());
    out.push_back(&b.norm.scale());
    out.push_back(&b.norm.shift());
  }
}

void Encoder::freeze_dropout(bool frozen) {
  for (auto& b : blocks_) b.dropout.freeze_mask(frozen);
}

// ---------------------------------------------------------------------------

MlpHead::MlpHead(const std::string& name, std::size_t in, const std::vector<std::size_t>& hidden,
                 std::size_t out, bool softplus_output, RngStream& init_rng) {
  std::size_t width = in;
  for (std::size_t i = 0; i <= hidden.size(); ++i) {
    const std::size_t next = i < hidden.size() ? hidden[i] : out;
    layers_.emplace_back(name + "." + std::to_string(i), width, next);
    layers_.back().init_he_uniform(init_rng);
    width = next;
  }
  relus_.resize(hidden.size());
  if (softplus_output) softplus_.emplace();
}

Matrix MlpHead::forward(const Matrix& x) {
  Matrix h = x;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    h = layers_[i].forward(h);
    if (i < relus_.size()) h = relus_[i].forward(h);
  }
  if (softplus_) h = softplus_->forward(h);
  return h;
}

Matrix MlpHead::backward(const Matrix& grad_out) {
  Matrix g = softplus_ ? softplus_->backward(grad_out) : grad_out;
  for (std::size_t i = layers_.size(); i-- > 0;) {
    if (i < relus_.size()) g = relus_[i].backward(g);
    g = layers_[i].backward(g);
  }
  return g;
}

void MlpHead::collect(std::vector<Parameter*>& out) {
  for (auto& l : layers_) {
    out.push_back(&l.weight());
    out.push_back(&l.bias());
  }
}

// ---------------------------------------------------------------------------

FairModel::FairModel(const ModelConfig& config, std::uint64_t seed) : config_(config) {
  config_.validate();
  RngStream init_rng(seed, streams::kInit);
  encoder_ = Encoder(config_, init_rng);
  task_head_ = MlpHead("task", config_.representation_dim(), config_.task_hidden, 1, true, init_rng);
  if (config_.variant == Variant::kFair) {
    RngStream adv_rng(seed, streams::kAdversaryInit);
    adversary_.emplace("adversary", config_.representation_dim(), config_.adversary_hidden,
                       config_.num_groups, false, adv_rng);
  }
}

ForwardOutput FairModel::forward(const Matrix& x, Mode mode, RngStream& dropout_rng) {
  if (x.cols() != config_.input_dim) {
    throw DataError("FairModel: input has " + std::to_string(x.cols()) + " features, expected " +
                    std::to_string(config_.input_dim));
  }
  for (double v : x.values()) {
    if (!std::isfinite(v) || std::abs(v) > kMaxStandardizedMagnitude) {
      std::ostringstream msg;
      msg << "FairModel: input value " << v << " exceeds |z| <= " << kMaxStandardizedMagnitude
          << "; standardize features before the forward pass";
      throw DataError(msg.str());
    }
  }
  ForwardOutput out;
  out.representation = encoder_.forward(x, mode, dropout_rng);
  out.predictions = task_head_.forward(out.representation);
  if (adversary_) out.logits = adversary_->forward(grl_forward(out.representation));
  return out;
}

ForwardOutput FairModel::infer(const Matrix& x) {
  RngStream unused(0, "inference");
  return forward(x, Mode::kInference, unused);
}

void FairModel::backward(const Matrix& grad_predictions, const Matrix* grad_logits,
                         double lambda) {
  Matrix grad_rep = task_head_.backward(grad_predictions);
  if (adversary_ && grad_logits != nullptr) {
    const Matrix adv_grad_rep = adversary_->backward(*grad_logits);
    grad_rep += grl_backward(adv_grad_rep, lambda);
  }
  encoder_.backward(grad_rep);
}

std::vector<Parameter*> FairModel::parameters() {
  std::vector<Parameter*> out;
  encoder_.collect(out);
  task_head_.collect(out);
  if (adversary_) adversary_->collect(out);
  return out;
}

std::vector<Parameter*> FairModel::encoder_parameters() {
  std::vector<Parameter*> out;
  encoder_.collect(out);
  return out;
}

std::vector<Parameter*> FairModel::task_parameters() {
  std::vector<Parameter*> out;
  task_head_.collect(out);
  return out;
}

std::vector<Parameter*> FairModel::adversary_parameters() {
  std::vector<Parameter*> out;
  if (adversary_) adversary_->collect(out);
  return out;
}

std::size_t FairModel::parameter_count() const {
  std::size_t n = 0;
  for (const auto* p : const_cast<FairModel*>(this)->parameters()) n += p->value.size();
  return n;
}

std::size_t FairModel::adversary_parameter_count() const {
  std::size_t n = 0;
  for (const auto* p : const_cast<FairModel*>(this)->adversary_parameters()) n += p->value.size();
  return n;
}

std::vector<FairModel::TensorView> FairModel::tensors() {
  std::vector<TensorView> out;
  auto add_param = [&](Parameter& p) {
    out.push_back({p.name, p.value.rows(), p.value.cols(), true, p.value.values()});
  };
  for (std::size_t i = 0; i < encoder_.blocks().size(); ++i) {
    auto& b = encoder_.blocks()[i];
    add_param(b.dense.weight());
    add_param(b.dense.bias());
    add_param(b.norm.scale());
    add_param(b.norm.shift());
    const std::string name = "encoder." + std::to_string(i) + ".norm";
    out.push_back({name + ".running_mean", 1, b.norm.running_mean().size(), false,
                   b.norm.running_mean()});
    out.push_back({name + ".running_var", 1, b.norm.running_var().size(), false,
                   b.norm.running_var()});
  }
  for (auto& l : task_head_.layers()) {
    add_param(l.weight());
    add_param(l.bias());
  }
  if (adversary_) {
    for (auto& l : adversary_->layers()) {
      add_param(l.weight());
      add_param(l.bias());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

StepOutput compute_gradients(FairModel& model, const Matrix& x, std::span<const double> y,
                             std::span<const int> groups, double lambda, RngStream& dropout_rng) {
  if (x.rows() < 2) throw DataError("training step needs a batch of at least 2 rows");
  if (y.size() != x.rows()) throw DataError("training step: target count mismatch");
  if (lambda < 0.0) throw DataError("training step: lambda must be non-negative");

  ForwardOutput fwd = model.forward(x, Mode::kTrain, dropout_rng);
  const LossResult task = mse_loss(fwd.predictions, Matrix::column(y));

  StepOutput out;
  out.task_loss = task.loss;
  if (model.has_adversary()) {
    if (groups.size() != x.rows()) throw DataError("training step: group label count mismatch");
    const LossResult adv = cross_entropy_loss(fwd.logits, groups);
    out.adv_loss = adv.loss;
    out.adv_accuracy = accuracy(fwd.logits, groups);
    model.backward(task.grad, &adv.grad, lambda);
  } else {
    model.backward(task.grad, nullptr, lambda);
  }
  out.total_loss = out.task_loss - lambda * out.adv_loss;
  out.predictions = std::move(fwd.predictions);
  return out;
}

StepOutput training_step(FairModel& model, const Matrix& x, std::span<const double> y,
                         std::span<const int> groups, double lambda, Adam& optimizer,
                         RngStream& dropout_rng) {
  StepOutput out = compute_gradients(model, x, y, groups, lambda, dropout_rng);
  optimizer.step();
  return out;
}

std::vector<double> predict(FairModel& model, const Dataset& data) {
  if (!model.standardization()) throw DataError("predict: model has no standardization parameters");
  const Matrix z = standardize(data.feature_matrix(), *model.standardization());
  const ForwardOutput fwd = model.infer(z);
  std::vector<double> out(fwd.predictions.values().begin(), fwd.predictions.values().end());
  for (double& v : out) v *= model.output_scale();
  return out;
}

}  // namespace floodaid
