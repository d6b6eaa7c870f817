#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "duriano/nn/autograd.hpp"

namespace duriano::nn {

Var constant(Tensor value);

Var matmul(const Var& a, const Var& b);
// Elementwise a + b; `b` may also be a 1 x cols row broadcast over a's rows.
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
// scale * a + shift
Var affine(const Var& a, double scale, double shift);

Var sigmoid(const Var& a);
Var tanh(const Var& a);
Var relu(const Var& a);

Var concat_cols(const std::vector<Var>& parts);
Var concat_rows(const std::vector<Var>& parts);
Var slice_cols(const Var& a, std::size_t begin, std::size_t count);
Var slice_rows(const Var& a, std::size_t begin, std::size_t count);
Var reshape(const Var& a, std::size_t rows, std::size_t cols);
Var reverse_rows(const Var& a);

// out[i] = table[ids[i]]; gradients scatter-add back into the table.
Var gather_rows(const Var& table, std::span<const int> ids);
// Row i of `a` repeated counts[i] times.
Var repeat_rows(const Var& a, std::span<const int> counts);

// [T, C] -> [T, k*C]: row t holds rows t-(k-1)/2 .. t+k/2, zero outside.
Var unfold_same(const Var& x, std::size_t k);
// Width-2, stride-1 max pooling; the last row is compared with nothing.
Var max_pool_pairs(const Var& x);

// Normalizes each column with the batch mean and biased variance.
Var batch_norm_train(const Var& x, const Var& gamma, const Var& beta, double eps);
// Normalizes with fixed statistics (1 x C tensors).
Var batch_norm_fixed(const Var& x, const Var& gamma, const Var& beta, const Tensor& mean, const Tensor& var,
                     double eps);

// Scalar reductions (1 x 1).
Var sum(const Var& a);
Var sum_abs_diff(const Var& a, const Tensor& target);
Var sum_squares(const Var& a);
Var dot(const Var& a, const Tensor& weights);

}  // namespace duriano::nn
