#include "floodaid/losses.hpp"

#include <algorithm>
#include <cmath>

#include "floodaid/errors.hpp"

namespace floodaid {

LossResult mse_loss(const Matrix& pred, const Matrix& target) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols() || pred.cols() != 1) {
    throw DataError("mse_loss: prediction and target must be equal-length single columns");
  }
  if (pred.rows() == 0) throw DataError("mse_loss: empty batch");
  const double n = static_cast<double>(pred.rows());
  LossResult out{0.0, Matrix(pred.rows(), 1)};
  for (std::size_t i = 0; i < pred.rows(); ++i) {
    const double diff = pred(i, 0) - target(i, 0);
    out.loss += diff * diff;
    out.grad(i, 0) = 2.0 * diff / n;
  }
  out.loss /= n;
  return out;
}

Matrix softmax(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    const auto in = logits.row(i);
    auto o = out.row(i);
    const double mx = *std::max_element(in.begin(), in.end());
    double sum = 0.0;
    for (std::size_t k = 0; k < in.size(); ++k) {
      o[k] = std::exp(in[k] - mx);
      sum += o[k];
    }
    for (double& v : o) v /= sum;
  }
  return out;
}

LossResult cross_entropy_loss(const Matrix& logits, std::span<const int> labels) {
  if (logits.rows() != labels.size()) throw DataError("cross_entropy_loss: label count mismatch");
  if (logits.rows() == 0 || logits.cols() == 0) throw DataError("cross_entropy_loss: empty input");
  const std::size_t k = logits.cols();
  for (int label : labels) {
    if (label < 0 || static_cast<std::size_t>(label) >= k) {
      throw DataError("cross_entropy_loss: label out of range");
    }
  }
  const double n = static_cast<double>(logits.rows());
  LossResult out{0.0, softmax(logits)};
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    const auto in = logits.row(i);
    const double mx = *std::max_element(in.begin(), in.end());
    double sum = 0.0;
    for (double v : in) sum += std::exp(v - mx);
    const auto y = static_cast<std::size_t>(labels[i]);
    out.loss += std::log(sum) - (in[y] - mx);
    out.grad(i, y) -= 1.0;
  }
  out.loss /= n;
  out.grad *= 1.0 / n;
  return out;
}

double accuracy(const Matrix& logits, std::span<const int> labels) {
  if (logits.rows() != labels.size()) throw DataError("accuracy: label count mismatch");
  if (labels.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    const auto r = logits.row(i);
    const auto best = std::max_element(r.begin(), r.end()) - r.begin();
    if (best == labels[i]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

}  // namespace floodaid
