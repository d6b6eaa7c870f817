#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "duriano/dsp/spectrogram.hpp"
#include "duriano/dsp/stft.hpp"

namespace duriano::dsp {

inline constexpr int kGriffinLimIterations = 60;

struct GriffinLimResult {
  AudioBuffer audio;
  // Mean squared magnitude error after each iteration, measured over the
  // full (Hermitian-extended) spectrum so that it is the quantity each
  // projection step minimizes.
  std::vector<double> errors;
};

// Phase reconstruction from raw magnitudes (T x bins), starting from zero
// phase.
GriffinLimResult griffin_lim_magnitude(const Matrix& target, int iterations, const StftConfig& cfg,
                                       std::optional<std::size_t> length = {});

// Decompresses the normalized spectrogram and reconstructs audio.
GriffinLimResult griffin_lim(const LinearSpectrogram& spec, int iterations = kGriffinLimIterations);

// Error measure used by griffin_lim_magnitude, exposed for checks.
double spectral_error(const ComplexMatrix& estimate, const Matrix& target);

}  // namespace duriano::dsp
