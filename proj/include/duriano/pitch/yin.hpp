#pragma once

#include <cstddef>
#include <vector>

#include "duriano/dsp/stft.hpp"

namespace duriano::pitch {

// Per-frame fundamental frequency in Hz; 0 marks an unvoiced frame.
struct PitchContour {
  std::vector<double> f0;
  double hop_seconds = 0.01;

  std::size_t size() const { return f0.size(); }
  std::size_t voiced_count() const;
};

struct YinOptions {
  double threshold = 0.15;
  // Viterbi smoothing over 0.1-semitone pitch states plus one unvoiced state.
  int bins_per_semitone = 10;
  double emission_sigma = 0.5;      // semitones
  double outlier_cost = 8.0;        // cap on the voiced emission cost
  double unvoiced_cost = 8.0;       // unvoiced state under a voiced observation
  double dropout_cost = 4.0;        // voiced state under an unvoiced observation
  double jump_cost = 1.0;           // per semitone of pitch change
  double voicing_switch_cost = 6.0;
};

// YIN difference-function pitch tracking followed by Viterbi smoothing. One
// value per hop, frame t centered on sample t * hop (clamped to the signal).
PitchContour extract_f0(const dsp::AudioBuffer& audio, int hop, double fmin, double fmax,
                        const YinOptions& options = {});

// Raw YIN estimates before smoothing (0 = no candidate below threshold).
std::vector<double> yin_candidates(const dsp::AudioBuffer& audio, int hop, double fmin, double fmax,
                                   double threshold);

double hz_to_midi(double f0);
double midi_to_hz(double midi);

}  // namespace duriano::pitch
