#include "duriano/model/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "duriano/util/error.hpp"

namespace duriano::model {

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

void TrainConfig::validate() const {
  if (batch_size < 1) throw ConfigError("invalid config: batch_size must be >= 1");
  if (adam.learning_rate < 0.0) throw ConfigError("invalid config: learning_rate must be >= 0");
  if (adam.decay_steps <= 0.0) throw ConfigError("invalid config: lr_decay_steps must be > 0");
  if (adam.decay_rate <= 0.0) throw ConfigError("invalid config: lr_decay_rate must be > 0");
}

void TrainConfig::write(KeyValueConfig& kv) const {
  kv.set("steps", std::to_string(steps));
  kv.set("batch_size", std::to_string(batch_size));
  kv.set("checkpoint_every", std::to_string(checkpoint_every));
  kv.set("seed", std::to_string(seed));
  kv.set("learning_rate", fmt(adam.learning_rate));
  kv.set("adam_beta1", fmt(adam.beta1));
  kv.set("adam_beta2", fmt(adam.beta2));
  kv.set("adam_epsilon", fmt(adam.epsilon));
  kv.set("lr_decay_rate", fmt(adam.decay_rate));
  kv.set("lr_decay_steps", fmt(adam.decay_steps));
  kv.set("clip_norm", fmt(adam.clip_norm));
}

TrainConfig TrainConfig::read(const KeyValueConfig& kv, const TrainConfig& base) {
  TrainConfig c;
  const auto nonneg = [&](const char* key, long long fallback) {
    const long long v = kv.get_int(key, fallback);
    if (v < 0) throw ConfigError(std::string("invalid config: ") + key + " must be >= 0");
    return static_cast<std::uint64_t>(v);
  };
  c.steps = nonneg("steps", static_cast<long long>(base.steps));
  c.batch_size = nonneg("batch_size", static_cast<long long>(base.batch_size));
  c.checkpoint_every = nonneg("checkpoint_every", static_cast<long long>(base.checkpoint_every));
  c.seed = nonneg("seed", static_cast<long long>(base.seed));
  c.adam.learning_rate = kv.get_double("learning_rate", base.adam.learning_rate);
  c.adam.beta1 = kv.get_double("adam_beta1", base.adam.beta1);
  c.adam.beta2 = kv.get_double("adam_beta2", base.adam.beta2);
  c.adam.epsilon = kv.get_double("adam_epsilon", base.adam.epsilon);
  c.adam.decay_rate = kv.get_double("lr_decay_rate", base.adam.decay_rate);
  c.adam.decay_steps = kv.get_double("lr_decay_steps", base.adam.decay_steps);
  c.adam.clip_norm = kv.get_double("clip_norm", base.adam.clip_norm);
  c.validate();
  return c;
}

Tensor to_tensor(const Matrix& m) { return Tensor(m.rows(), m.cols(), m.storage()); }

Matrix to_matrix(const Tensor& t) {
  Matrix m(t.rows(), t.cols());
  m.storage() = t.values();
  return m;
}

PreparedExample prepare(const corpus::TrainingExample& ex) {
  return {&ex, to_tensor(ex.mel.frames), to_tensor(ex.linear.frames)};
}

std::string log_header() { return "step\tloss_mel\tloss_linear\tl2\twallclock_ms"; }

std::string format_log_line(const StepLog& log) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%llu\t%.9f\t%.9f\t%.9e\t%.1f", static_cast<unsigned long long>(log.step), log.loss_mel,
                log.loss_linear, log.l2, log.wallclock_ms);
  return buf;
}

std::vector<std::size_t> batch_indices(std::size_t examples, std::size_t batch_size, std::uint64_t step,
                                       std::uint64_t seed) {
  if (examples == 0) throw InputError("no training examples");
  std::vector<std::size_t> out;
  std::uint64_t cached_epoch = ~std::uint64_t{0};
  std::vector<std::size_t> perm(examples);
  for (std::size_t b = 0; b < batch_size; ++b) {
    const std::uint64_t sample = (step - 1) * batch_size + b;
    const std::uint64_t epoch = sample / examples;
    if (epoch != cached_epoch) {
      std::iota(perm.begin(), perm.end(), std::size_t{0});
      Rng rng(Rng::mix(seed, epoch));
      for (std::size_t i = examples; i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);
      cached_epoch = epoch;
    }
    out.push_back(perm[sample % examples]);
  }
  return out;
}

StepLog train_step(DurianoModel& model, nn::Adam& optimizer, std::span<const PreparedExample* const> batch,
                   std::uint64_t step, std::uint64_t seed) {
  const auto start = std::chrono::steady_clock::now();
  if (batch.empty()) throw InputError("train_step: empty batch");
  const auto phrases = [&] {
    std::string ids;
    for (const auto* ex : batch) ids += (ids.empty() ? "" : ",") + ex->example->phrase_id;
    return ids;
  };

  model.params().zero_grad();
  std::vector<ModelOutput> outputs;
  std::vector<const Tensor*> mels, linears;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const PreparedExample& ex = *batch[b];
    nn::ForwardContext ctx;
    ctx.training = true;
    ctx.dropout_seed = Rng::mix(Rng::mix(seed ^ 0x5eedULL, step), b);
    outputs.push_back(model.forward(ex.example->plan, ex.example->f0, &ex.mel, DecodeMode::teacher_forced, ctx));
    mels.push_back(&ex.mel);
    linears.push_back(&ex.linear);
  }
  LossTerms terms = loss(outputs, mels, linears, model, model.config().l2);

  StepLog log;
  log.step = step;
  log.loss_mel = terms.mel;
  log.loss_linear = terms.linear;
  log.l2 = terms.l2;
  if (!std::isfinite(terms.total.value()[0]))
    throw NumericError("non-finite loss at step " + std::to_string(step) + " (phrases " + phrases() + ")");
  nn::backward(terms.total);
  try {
    log.grad_norm = optimizer.step(model.params()).grad_norm;
  } catch (const NumericError& e) {
    throw NumericError(std::string(e.what()) + " at step " + std::to_string(step) + " (phrases " + phrases() + ")");
  }
  log.wallclock_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return log;
}

}  // namespace duriano::model
