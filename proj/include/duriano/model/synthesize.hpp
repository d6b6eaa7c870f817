#pragma once

#include <cstdint>
#include <span>

#include "duriano/align/plan.hpp"
#include "duriano/dsp/griffin_lim.hpp"
#include "duriano/dsp/spectrogram.hpp"
#include "duriano/model/duriano.hpp"

namespace duriano::model {

struct SynthesisOptions {
  dsp::StftConfig stft;
  dsp::Compression compression;
  int griffin_lim_iterations = dsp::kGriffinLimIterations;
  // Seeds the decoder pre-net dropout, which stays active at inference.
  std::uint64_t dropout_seed = 0;
};

struct SynthesisResult {
  dsp::MelSpectrogram mel;
  dsp::LinearSpectrogram linear;  // clipped to [0, 1]
  dsp::AudioBuffer audio;
};

// Free-running decode from the plan, post-net, decompression and
// Griffin-Lim. `f0_hz` is only read by f0-mode models.
SynthesisResult synthesize(const DurianoModel& model, const align::FrameFeaturePlan& plan,
                           std::span<const double> f0_hz, const SynthesisOptions& options = {});

}  // namespace duriano::model
