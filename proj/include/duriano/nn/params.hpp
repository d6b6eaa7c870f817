#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "duriano/nn/autograd.hpp"
#include "duriano/util/rng.hpp"

namespace duriano::nn {

struct Parameter {
  std::string name;
  Var var;
};

// Non-trainable state such as batch-norm running statistics.
struct Buffer {
  std::string name;
  std::shared_ptr<Tensor> tensor;
};

// Owns every trainable tensor of a model under a unique name.
class ParamStore {
 public:
  Var create(const std::string& name, Tensor init);
  std::shared_ptr<Tensor> create_buffer(const std::string& name, Tensor init);

  const std::vector<Parameter>& parameters() const { return params_; }
  const std::vector<Buffer>& buffers() const { return buffers_; }
  const Parameter* find(const std::string& name) const;

  void zero_grad();
  std::size_t parameter_count() const;
  // Rounds parameters and buffers to float32 so checkpoints restore them
  // exactly.
  void round_to_float();
  bool all_finite() const;

 private:
  void claim(const std::string& name);
  std::vector<Parameter> params_;
  std::vector<Buffer> buffers_;
  std::vector<std::string> names_;
};

// Initializers.
Tensor uniform_fan_in(std::size_t fan_in, std::size_t fan_out, Rng& rng);
Tensor normal_table(std::size_t rows, std::size_t cols, double stddev, Rng& rng);

// Per-call switches for layers whose behavior depends on the phase.
struct ForwardContext {
  bool training = false;
  // Dropout is applied iff a seed is present. Masks depend only on
  // (seed, layer, row), so sequential and batched evaluation agree.
  std::optional<std::uint64_t> dropout_seed;
  double bn_momentum = 0.1;
};

}  // namespace duriano::nn
