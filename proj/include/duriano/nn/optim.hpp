#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "duriano/nn/checkpoint.hpp"
#include "duriano/nn/params.hpp"

namespace duriano::nn {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  // lr(step) = learning_rate * decay_rate^(step / decay_steps)
  double decay_rate = 0.5;
  double decay_steps = 50000;
  // Global gradient-norm clip; <= 0 disables.
  double clip_norm = 1.0;
};

struct UpdateReport {
  double grad_norm = 0.0;
  double learning_rate = 0.0;
  bool clipped = false;
};

// Adam with exponential learning-rate decay. Parameters and moments are
// kept at float32 precision after every update.
class Adam {
 public:
  Adam() = default;
  Adam(const AdamConfig& cfg, const ParamStore& store);

  // Applies one update from the gradients currently held by the store.
  // Throws NumericError, naming the offending tensors, if any gradient or
  // updated value is non-finite.
  UpdateReport step(ParamStore& store);

  double learning_rate_at(std::uint64_t step) const;
  std::uint64_t steps() const { return steps_; }
  const AdamConfig& config() const { return cfg_; }

  void export_state(TensorArchive& archive) const;
  void import_state(const TensorArchive& archive, const ParamStore& store, std::uint64_t steps);

 private:
  AdamConfig cfg_;
  std::vector<std::string> names_;
  std::vector<Tensor> m_, v_;
  std::uint64_t steps_ = 0;
};

// Euclidean norm over every parameter gradient.
double gradient_norm(const ParamStore& store);

}  // namespace duriano::nn
