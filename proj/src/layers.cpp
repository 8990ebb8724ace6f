#include "floodaid/layers.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "floodaid/errors.hpp"

namespace floodaid {

DenseLayer::DenseLayer(std::string name, std::size_t in, std::size_t out)
    : weight_{name + ".weight", Matrix(in, out), Matrix(in, out)},
      bias_{name + ".bias", Matrix(1, out), Matrix(1, out)} {
  if (in == 0 || out == 0) throw DataError("DenseLayer " + name + ": zero width");
}

void DenseLayer::init_he_uniform(RngStream& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(in_dim()));
  for (double& w : weight_.value.values()) w = rng.uniform(-bound, bound);
  bias_.value.fill(0.0);
}

Matrix DenseLayer::forward(const Matrix& x) {
  if (x.cols() != in_dim()) {
    std::ostringstream msg;
    msg << weight_.name << ": input has " << x.cols() << " columns, expected " << in_dim();
    throw DataError(msg.str());
  }
  input_ = x;
  has_input_ = true;
  Matrix out = matmul(x, weight_.value);
  const auto b = bias_.value.row(0);
  for (std::size_t i = 0; i < out.rows(); ++i) {
    auto r = out.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) r[j] += b[j];
  }
  return out;
}

Matrix DenseLayer::backward(const Matrix& grad_out) {
  if (!has_input_) throw DataError(weight_.name + ": backward called before forward");
  if (grad_out.rows() != input_.rows() || grad_out.cols() != out_dim()) {
    throw DataError(weight_.name + ": upstream gradient shape mismatch");
  }
  weight_.grad = matmul_tn(input_, grad_out);
  bias_.grad = Matrix(1, out_dim());
  auto gb = bias_.grad.row(0);
  for (std::size_t i = 0; i < grad_out.rows(); ++i) {
    auto g = grad_out.row(i);
    for (std::size_t j = 0; j < g.size(); ++j) gb[j] += g[j];
  }
  return matmul_nt(grad_out, weight_.value);
}

BatchNormLayer::BatchNormLayer(std::string name, std::size_t features, double momentum,
                               double epsilon)
    : scale_{name + ".scale", Matrix(1, features, 1.0), Matrix(1, features)},
      shift_{name + ".shift", Matrix(1, features), Matrix(1, features)},
      running_mean_(features, 0.0),
      running_var_(features, 1.0),
      momentum_(momentum),
      epsilon_(epsilon) {
  if (!(epsilon > 0.0)) throw DataError("BatchNormLayer: epsilon must be positive");
  if (momentum < 0.0 || momentum > 1.0) throw DataError("BatchNormLayer: momentum outside [0,1]");
}

Matrix BatchNormLayer::forward(const Matrix& x, Mode mode) {
  const std::size_t n = x.rows();
  const std::size_t f = x.cols();
  if (f != running_mean_.size()) throw DataError(scale_.name + ": feature count mismatch");
  if (mode == Mode::kTrain && n < 2) {
    throw DataError(scale_.name + ": train-mode batch normalization needs at least 2 rows");
  }

  std::vector<double> mean(f, 0.0);
  std::vector<double> var(f, 0.0);
  if (mode == Mode::kTrain) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < f; ++j) mean[j] += x(i, j);
    for (double& m : mean) m /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < f; ++j) {
        const double d = x(i, j) - mean[j];
        var[j] += d * d;
      }
    for (double& v : var) v /= static_cast<double>(n);
    const double unbias = static_cast<double>(n) / static_cast<double>(n - 1);
    for (std::size_t j = 0; j < f; ++j) {
      running_mean_[j] = (1.0 - momentum_) * running_mean_[j] + momentum_ * mean[j];
      running_var_[j] = (1.0 - momentum_) * running_var_[j] + momentum_ * var[j] * unbias;
    }
  } else {
    mean = running_mean_;
    var = running_var_;
  }

  inv_std_.assign(f, 0.0);
  for (std::size_t j = 0; j < f; ++j) inv_std_[j] = 1.0 / std::sqrt(var[j] + epsilon_);

  normalized_ = Matrix(n, f);
  Matrix out(n, f);
  const auto g = scale_.value.row(0);
  const auto b = shift_.value.row(0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < f; ++j) {
      const double xh = (x(i, j) - mean[j]) * inv_std_[j];
      normalized_(i, j) = xh;
      out(i, j) = g[j] * xh + b[j];
    }
  last_mode_ = mode;
  has_cache_ = true;
  return out;
}

Matrix BatchNormLayer::backward(const Matrix& grad_out) {
  if (!has_cache_) throw DataError(scale_.name + ": backward called before forward");
  const std::size_t n = grad_out.rows();
  const std::size_t f = grad_out.cols();
  if (n != normalized_.rows() || f != normalized_.cols()) {
    throw DataError(scale_.name + ": upstream gradient shape mismatch");
  }

  scale_.grad = Matrix(1, f);
  shift_.grad = Matrix(1, f);
  auto dgamma = scale_.grad.row(0);
  auto dbeta = shift_.grad.row(0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < f; ++j) {
      dgamma[j] += grad_out(i, j) * normalized_(i, j);
      dbeta[j] += grad_out(i, j);
    }

  const auto gamma = scale_.value.row(0);
  Matrix grad_in(n, f);
  if (last_mode_ == Mode::kInference) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < f; ++j) grad_in(i, j) = grad_out(i, j) * gamma[j] * inv_std_[j];
    return grad_in;
  }

  // dx = inv_std / N * (N * dxh - sum(dxh) - xh * sum(dxh * xh)), dxh = dy * gamma
  const double nn = static_cast<double>(n);
  for (std::size_t j = 0; j < f; ++j) {
    double sum_dxh = 0.0;
    double sum_dxh_xh = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double dxh = grad_out(i, j) * gamma[j];
      sum_dxh += dxh;
      sum_dxh_xh += dxh * normalized_(i, j);
    }
    for (std::size_t i = 0; i < n; ++i) {
      const double dxh = grad_out(i, j) * gamma[j];
      grad_in(i, j) =
          inv_std_[j] / nn * (nn * dxh - sum_dxh - normalized_(i, j) * sum_dxh_xh);
    }
  }
  return grad_in;
}

DropoutLayer::DropoutLayer(double p) : p_(p) {
  if (!(p >= 0.0 && p < 1.0)) throw DataError("DropoutLayer: p must lie in [0, 1)");
}

Matrix DropoutLayer::forward(const Matrix& x, Mode mode, RngStream& rng) {
  if (mode == Mode::kInference || p_ == 0.0) {
    identity_ = true;
    return x;
  }
  identity_ = false;
  if (!frozen_ || mask_.rows() != x.rows() || mask_.cols() != x.cols()) {
    if (frozen_) throw DataError("DropoutLayer: frozen mask does not match the input shape");
    mask_ = Matrix(x.rows(), x.cols());
    const double keep_scale = 1.0 / (1.0 - p_);
    for (double& m : mask_.values()) m = rng.uniform() < p_ ? 0.0 : keep_scale;
  }
  Matrix out = x;
  auto o = out.values();
  const auto m = mask_.values();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] *= m[i];
  return out;
}

Matrix DropoutLayer::backward(const Matrix& grad_out) const {
  if (identity_) return grad_out;
  if (grad_out.rows() != mask_.rows() || grad_out.cols() != mask_.cols()) {
    throw DataError("DropoutLayer: upstream gradient shape mismatch");
  }
  Matrix g = grad_out;
  auto gv = g.values();
  const auto m = mask_.values();
  for (std::size_t i = 0; i < gv.size(); ++i) gv[i] *= m[i];
  return g;
}

Matrix ReluLayer::forward(const Matrix& x) {
  input_ = x;
  Matrix out = x;
  for (double& v : out.values()) v = v > 0.0 ? v : 0.0;
  return out;
}

Matrix ReluLayer::backward(const Matrix& grad_out) const {
  if (grad_out.size() != input_.size()) throw DataError("ReluLayer: backward shape mismatch");
  Matrix g = grad_out;
  auto gv = g.values();
  const auto in = input_.values();
  for (std::size_t i = 0; i < gv.size(); ++i)
    if (!(in[i] > 0.0)) gv[i] = 0.0;
  return g;
}

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Matrix SoftplusLayer::forward(const Matrix& x) {
  input_ = x;
  Matrix out = x;
  for (double& v : out.values()) v = softplus(v);
  return out;
}

Matrix SoftplusLayer::backward(const Matrix& grad_out) const {
  if (grad_out.size() != input_.size()) throw DataError("SoftplusLayer: backward shape mismatch");
  Matrix g = grad_out;
  auto gv = g.values();
  const auto in = input_.values();
  for (std::size_t i = 0; i < gv.size(); ++i) gv[i] *= sigmoid(in[i]);
  return g;
}

Matrix grl_backward(const Matrix& grad_out, double lambda) {
  if (lambda < 0.0) throw DataError("gradient reversal: lambda must be non-negative");
  return (-lambda) * grad_out;
}

}  // namespace floodaid
