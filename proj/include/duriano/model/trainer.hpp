#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "duriano/corpus/dataset.hpp"
#include "duriano/model/duriano.hpp"
#include "duriano/nn/optim.hpp"
#include "duriano/util/key_value.hpp"

namespace duriano::model {

struct TrainConfig {
  std::uint64_t steps = 200;
  std::size_t batch_size = 4;
  std::uint64_t checkpoint_every = 100;
  std::uint64_t seed = 0;
  nn::AdamConfig adam;

  void validate() const;
  void write(KeyValueConfig& kv) const;
  static TrainConfig read(const KeyValueConfig& kv, const TrainConfig& base);
};

// Training example with targets converted to tensors once.
struct PreparedExample {
  const corpus::TrainingExample* example = nullptr;
  Tensor mel;
  Tensor linear;
};

PreparedExample prepare(const corpus::TrainingExample& ex);
Tensor to_tensor(const Matrix& m);
Matrix to_matrix(const Tensor& t);

struct StepLog {
  std::uint64_t step = 0;  // 1-based index of the update
  double loss_mel = 0.0;
  double loss_linear = 0.0;
  double l2 = 0.0;
  double wallclock_ms = 0.0;
  double grad_norm = 0.0;

  double total() const { return loss_mel + loss_linear + l2; }
};

// `step<TAB>loss_mel<TAB>loss_linear<TAB>l2<TAB>wallclock_ms`
std::string format_log_line(const StepLog& log);
std::string log_header();

// Example indices for update `step` (1-based). Each epoch visits a fresh
// seeded permutation, so the selection depends only on (seed, step).
std::vector<std::size_t> batch_indices(std::size_t examples, std::size_t batch_size, std::uint64_t step,
                                       std::uint64_t seed);

// Teacher-forced forward pass, backward pass and one optimizer update.
// Throws NumericError naming the step and phrases when the loss or an
// update is non-finite.
StepLog train_step(DurianoModel& model, nn::Adam& optimizer, std::span<const PreparedExample* const> batch,
                   std::uint64_t step, std::uint64_t seed);

// Runs updates (optimizer.steps(), last_step], calling `on_step` after each.
template <typename OnStep>
void train(DurianoModel& model, nn::Adam& optimizer, const std::vector<PreparedExample>& data, const TrainConfig& cfg,
           std::uint64_t last_step, OnStep&& on_step) {
  for (std::uint64_t step = optimizer.steps() + 1; step <= last_step; ++step) {
    std::vector<const PreparedExample*> batch;
    for (std::size_t i : batch_indices(data.size(), cfg.batch_size, step, cfg.seed)) batch.push_back(&data[i]);
    on_step(train_step(model, optimizer, batch, step, cfg.seed));
  }
}

}  // namespace duriano::model
