#pragma once

#include <span>

#include "postcheck/nn/parameters.hpp"

namespace postcheck::nn {

// Mean over rows of -sum_c q_c log softmax(logits)_c with q_true = 1 - eps + eps/K
// and q_other = eps/K. When grad is given it receives d(loss)/d(logits).
double smoothing_ce(const Matrix& logits, std::span<const int> labels, double epsilon, Matrix* grad);

}  // namespace postcheck::nn
