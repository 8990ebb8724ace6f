#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "floodaid/matrix.hpp"
#include "floodaid/rng.hpp"

namespace floodaid {

enum class Mode { kTrain, kInference };

// A trainable tensor and the gradient written by the last backward pass.
struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;
};

// y = x W + b, W is (in x out).
class DenseLayer {
 public:
  DenseLayer() = default;
  DenseLayer(std::string name, std::size_t in, std::size_t out);

  // He-uniform weights (bound sqrt(6 / fan_in)), zero bias.
  void init_he_uniform(RngStream& rng);

  Matrix forward(const Matrix& x);
  // Writes weight/bias gradients, returns dL/dx. Throws if forward was not run.
  Matrix backward(const Matrix& grad_out);

  std::size_t in_dim() const { return weight_.value.rows(); }
  std::size_t out_dim() const { return weight_.value.cols(); }

  Parameter& weight() { return weight_; }
  Parameter& bias() { return bias_; }
  const Parameter& weight() const { return weight_; }
  const Parameter& bias() const { return bias_; }

 private:
  Parameter weight_;
  Parameter bias_;
  Matrix input_;
  bool has_input_ = false;
};

// Per-feature batch normalization with learnable scale/shift.
class BatchNormLayer {
 public:
  BatchNormLayer() = default;
  BatchNormLayer(std::string name, std::size_t features, double momentum = 0.1,
                 double epsilon = 1e-5);

  // Train mode normalizes by batch statistics (population variance) and
  // updates the running estimates; inference mode uses the running estimates.
  Matrix forward(const Matrix& x, Mode mode);
  Matrix backward(const Matrix& grad_out);

  Parameter& scale() { return scale_; }
  Parameter& shift() { return shift_; }
  const Parameter& scale() const { return scale_; }
  const Parameter& shift() const { return shift_; }

  std::vector<double>& running_mean() { return running_mean_; }
  std::vector<double>& running_var() { return running_var_; }
  const std::vector<double>& running_mean() const { return running_mean_; }
  const std::vector<double>& running_var() const { return running_var_; }

  double momentum() const { return momentum_; }
  double epsilon() const { return epsilon_; }

 private:
  Parameter scale_;
  Parameter shift_;
  std::vector<double> running_mean_;
  std::vector<double> running_var_;
  double momentum_ = 0.1;
  double epsilon_ = 1e-5;

  Matrix normalized_;
  std::vector<double> inv_std_;
  Mode last_mode_ = Mode::kTrain;
  bool has_cache_ = false;
};

// Inverted dropout: kept units are scaled by 1/(1-p) during training so the
// inference pass is the identity.
class DropoutLayer {
 public:
  explicit DropoutLayer(double p = 0.0);

  Matrix forward(const Matrix& x, Mode mode, RngStream& rng);
  Matrix backward(const Matrix& grad_out) const;

  // While frozen, train-mode forward reuses the last mask instead of drawing.
  void freeze_mask(bool frozen) { frozen_ = frozen; }
  bool mask_frozen() const { return frozen_; }

  double p() const { return p_; }
  const Matrix& mask() const { return mask_; }

 private:
  double p_;
  Matrix mask_;
  bool frozen_ = false;
  bool identity_ = true;
};

class ReluLayer {
 public:
  Matrix forward(const Matrix& x);
  Matrix backward(const Matrix& grad_out) const;

 private:
  Matrix input_;
};

// log(1 + exp(x)), computed without overflow; strictly positive output.
class SoftplusLayer {
 public:
  Matrix forward(const Matrix& x);
  Matrix backward(const Matrix& grad_out) const;

 private:
  Matrix input_;
};

double softplus(double x);
double sigmoid(double x);

// Gradient reversal: identity forward, -lambda * upstream backward.
inline const Matrix& grl_forward(const Matrix& z) { return z; }
Matrix grl_backward(const Matrix& grad_out, double lambda);

}  // namespace floodaid
