#include "duriano/model/synthesize.hpp"

#include <algorithm>

#include "duriano/model/trainer.hpp"
#include "duriano/util/error.hpp"

namespace duriano::model {

SynthesisResult synthesize(const DurianoModel& model, const align::FrameFeaturePlan& plan,
                           std::span<const double> f0_hz, const SynthesisOptions& options) {
  options.stft.validate();
  if (options.stft.bins() != model.config().linear_bins)
    throw ConfigError("invalid config: STFT has " + std::to_string(options.stft.bins()) + " bins, model predicts " +
                      std::to_string(model.config().linear_bins));
  nn::NoGradGuard no_grad;
  nn::ForwardContext ctx;
  ctx.training = false;
  ctx.dropout_seed = options.dropout_seed;
  const ModelOutput out = model.forward(plan, f0_hz, nullptr, DecodeMode::free_running, ctx);

  SynthesisResult result;
  result.mel.frames = to_matrix(out.mel.value());
  result.linear.frames = to_matrix(out.linear.value());
  for (auto& v : result.mel.frames.storage()) v = std::clamp(v, 0.0, 1.0);
  for (auto& v : result.linear.frames.storage()) v = std::clamp(v, 0.0, 1.0);
  result.linear.config = options.stft;
  result.linear.compression = options.compression;
  const Matrix magnitude = dsp::decompress(result.linear.frames, options.compression);
  result.audio = dsp::griffin_lim_magnitude(magnitude, options.griffin_lim_iterations, options.stft).audio;
  return result;
}

}  // namespace duriano::model
