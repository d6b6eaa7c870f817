#include "duriano/dsp/griffin_lim.hpp"

#include <cmath>
#include <string>

#include "duriano/util/error.hpp"

namespace duriano::dsp {

double spectral_error(const ComplexMatrix& estimate, const Matrix& target) {
  const std::size_t bins = target.cols();
  double acc = 0.0, weight = 0.0;
  for (std::size_t t = 0; t < target.rows(); ++t) {
    for (std::size_t b = 0; b < bins; ++b) {
      // DC and Nyquist appear once in the full spectrum, the rest twice.
      const double w = (b == 0 || b + 1 == bins) ? 1.0 : 2.0;
      const double d = std::abs(estimate(t, b)) - target(t, b);
      acc += w * d * d;
      weight += w;
    }
  }
  return weight > 0.0 ? acc / weight : 0.0;
}

GriffinLimResult griffin_lim_magnitude(const Matrix& target, int iterations, const StftConfig& cfg,
                                       std::optional<std::size_t> length) {
  cfg.validate();
  if (iterations < 1) throw ConfigError("invalid config: griffin_lim needs at least one iteration");
  if (target.cols() != cfg.bins())
    throw InputError("griffin_lim: spectrogram has " + std::to_string(target.cols()) + " bins, config expects " +
                     std::to_string(cfg.bins()));
  if (target.rows() == 0) throw InputError("empty input");

  const std::size_t n = length.value_or(length_for_frames(target.rows(), cfg));
  ComplexMatrix spec(target.rows(), target.cols());
  for (std::size_t i = 0; i < target.size(); ++i) spec.data()[i] = {target.data()[i], 0.0};

  GriffinLimResult result;
  result.errors.reserve(static_cast<std::size_t>(iterations));
  for (int it = 0; it < iterations; ++it) {
    result.audio = istft(spec, cfg, n);
    const ComplexMatrix estimate = stft(result.audio, cfg);
    result.errors.push_back(spectral_error(estimate, target));
    for (std::size_t i = 0; i < spec.size(); ++i) {
      const double phase = std::arg(estimate.data()[i]);
      spec.data()[i] = std::polar(target.data()[i], phase);
    }
  }
  return result;
}

GriffinLimResult griffin_lim(const LinearSpectrogram& spec, int iterations) {
  spec.validate();
  return griffin_lim_magnitude(decompress(spec.frames, spec.compression), iterations, spec.config);
}

}  // namespace duriano::dsp
