#include "duriano/nn/tensor.hpp"

#include <algorithm>
#include <cmath>

#include "duriano/util/error.hpp"

namespace duriano::nn {

Tensor::Tensor(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) throw InputError("tensor data length does not match shape");
}

std::string Tensor::shape_string() const { return "[" + std::to_string(rows_) + ", " + std::to_string(cols_) + "]"; }

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

void round_to_float(Tensor& t) {
  for (auto& v : t.values()) v = static_cast<double>(static_cast<float>(v));
}

}  // namespace duriano::nn
