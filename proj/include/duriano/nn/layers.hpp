#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "duriano/nn/ops.hpp"
#include "duriano/nn/params.hpp"

namespace duriano::nn {

enum class Activation { identity, relu, tanh, sigmoid };

Var activate(const Var& x, Activation act);

// y = act(x W + b), W: [in, out], b: [1, out].
class Linear {
 public:
  Linear() = default;
  Linear(ParamStore& store, const std::string& name, std::size_t in, std::size_t out, Activation act, Rng& rng);
  Var operator()(const Var& x) const;

  std::size_t in_dim() const { return weight_.rows(); }
  std::size_t out_dim() const { return weight_.cols(); }
  const Var& weight() const { return weight_; }
  const Var& bias() const { return bias_; }

 private:
  Var weight_, bias_;
  Activation act_ = Activation::identity;
};

class Embedding {
 public:
  Embedding() = default;
  Embedding(ParamStore& store, const std::string& name, std::size_t vocab, std::size_t dim, Rng& rng);
  Var operator()(std::span<const int> ids) const { return gather_rows(table_, ids); }

  std::size_t vocab() const { return table_.rows(); }
  std::size_t dim() const { return table_.cols(); }
  const Var& table() const { return table_; }

 private:
  Var table_;
};

// Same-length 1-D convolution over time, implemented as unfold + matmul.
class Conv1d {
 public:
  Conv1d() = default;
  Conv1d(ParamStore& store, const std::string& name, std::size_t in, std::size_t out, std::size_t kernel, Rng& rng);
  Var operator()(const Var& x) const;

  std::size_t kernel() const { return kernel_; }
  const Var& weight() const { return weight_; }
  const Var& bias() const { return bias_; }

 private:
  Var weight_, bias_;
  std::size_t kernel_ = 1;
};

// Batch statistics in training (updating running averages), running
// statistics otherwise.
class BatchNorm {
 public:
  BatchNorm() = default;
  BatchNorm(ParamStore& store, const std::string& name, std::size_t channels);
  Var operator()(const Var& x, const ForwardContext& ctx) const;

  const Tensor& running_mean() const { return *mean_; }
  const Tensor& running_var() const { return *var_; }

 private:
  Var gamma_, beta_;
  std::shared_ptr<Tensor> mean_, var_;
  static constexpr double kEps = 1e-5;
};

// y = t * relu(x Wh + bh) + (1 - t) * x with t = sigmoid(x Wt + bt).
class Highway {
 public:
  Highway() = default;
  Highway(ParamStore& store, const std::string& name, std::size_t dim, Rng& rng);
  Var operator()(const Var& x) const;

  const Linear& transform() const { return transform_; }
  const Linear& gate() const { return gate_; }

 private:
  Linear transform_, gate_;
};

// Gated recurrent unit:
//   r = s(x Wr + h Ur + b), z = s(x Wz + h Uz + b),
//   n = tanh(x Wn + bxn + r * (h Un + bhn)), h' = (1 - z) * n + z * h.
// Gate order within the 3H-wide weights is [r, z, n].
class Gru {
 public:
  Gru() = default;
  Gru(ParamStore& store, const std::string& name, std::size_t in, std::size_t hidden, Rng& rng);

  Var cell(const Var& x_row, const Var& h_prev) const;
  // Cell step given x_row already projected by input_projection().
  Var step(const Var& projected_row, const Var& h_prev) const;
  Var input_projection(const Var& x) const;
  // Runs over all rows of x from a zero state; returns [T, hidden].
  Var run(const Var& x) const;
  Var zero_state() const;

  std::size_t hidden() const { return w_h_.rows(); }
  std::size_t input() const { return w_x_.rows(); }
  const Var& input_weight() const { return w_x_; }
  const Var& input_bias() const { return b_x_; }
  const Var& hidden_bias() const { return b_h_; }

 private:
  Var w_x_, w_h_, b_x_, b_h_;
};

class BiGru {
 public:
  BiGru() = default;
  BiGru(ParamStore& store, const std::string& name, std::size_t in, std::size_t hidden, Rng& rng);
  // [T, in] -> [T, 2 hidden]: forward states then time-aligned backward states.
  Var operator()(const Var& x) const;

 private:
  Gru forward_, backward_;
};

struct CbhgConfig {
  std::size_t bank_k = 16;
  std::size_t bank_channels = 128;
  std::vector<std::size_t> projections = {128, 128};
  std::size_t highway_layers = 4;
  std::size_t highway_dim = 128;
  std::size_t gru_units = 128;

  std::size_t output_dim() const { return 2 * gru_units; }
};

// Conv bank -> max pool -> conv projections -> residual -> highway -> bi-GRU.
class Cbhg {
 public:
  Cbhg() = default;
  Cbhg(ParamStore& store, const std::string& name, std::size_t input_dim, const CbhgConfig& cfg, Rng& rng);
  Var operator()(const Var& x, const ForwardContext& ctx) const;

  // Conv bank alone: K same-padded convolutions, each with batch norm and
  // ReLU, concatenated along channels.
  Var bank(const Var& x, const ForwardContext& ctx) const;

  const CbhgConfig& config() const { return cfg_; }

 private:
  CbhgConfig cfg_;
  std::size_t input_dim_ = 0;
  std::vector<Conv1d> bank_;
  std::vector<BatchNorm> bank_bn_;
  std::vector<Conv1d> proj_;
  std::vector<BatchNorm> proj_bn_;
  std::optional<Linear> pre_highway_;
  std::vector<Highway> highway_;
  BiGru gru_;
};

// Fully-connected ReLU layers with (optional) dropout.
class Prenet {
 public:
  Prenet() = default;
  // `stream` separates the dropout masks of different prenets.
  Prenet(ParamStore& store, const std::string& name, std::size_t in, const std::vector<std::size_t>& dims,
         double dropout, Rng& rng, std::size_t stream = 0);
  // `row_offset` identifies the absolute row index of x's first row for the
  // dropout mask stream.
  Var operator()(const Var& x, const ForwardContext& ctx, std::size_t row_offset = 0) const;

  std::size_t out_dim() const { return layers_.empty() ? 0 : layers_.back().out_dim(); }

 private:
  std::vector<Linear> layers_;
  double dropout_ = 0.0;
  std::size_t stream_ = 0;
};

// Inverted-dropout mask for rows [row_offset, row_offset + rows) of layer
// `layer`: entries are 0 or 1 / (1 - p).
Tensor dropout_mask(std::uint64_t seed, std::size_t layer, std::size_t row_offset, std::size_t rows, std::size_t cols,
                    double p);

}  // namespace duriano::nn
