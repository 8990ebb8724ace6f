#pragma once

#include <span>

#include "floodaid/matrix.hpp"

namespace floodaid {

struct LossResult {
  double loss = 0.0;
  Matrix grad;  // dLoss/dInput, same shape as the input
};

// Mean squared error over a single-column prediction. grad = 2(pred - y)/N.
LossResult mse_loss(const Matrix& pred, const Matrix& target);

// Row-wise softmax with max subtraction.
Matrix softmax(const Matrix& logits);

// Mean negative log-likelihood of softmax(logits); grad = (softmax - onehot)/N.
LossResult cross_entropy_loss(const Matrix& logits, std::span<const int> labels);

// Fraction of rows whose argmax matches the label.
double accuracy(const Matrix& logits, std::span<const int> labels);

}  // namespace floodaid
