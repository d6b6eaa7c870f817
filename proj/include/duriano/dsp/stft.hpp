#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "duriano/util/matrix.hpp"

namespace duriano::dsp {

enum class Window { hann };

// Analysis parameters. The canonical configuration is 44.1 kHz audio with a
// 50 ms window, 10 ms hop and a 4096-point FFT (2049 bins).
struct StftConfig {
  int sample_rate = 44100;
  int win_length = 2205;
  int hop_length = 441;
  int fft_size = 4096;
  Window window = Window::hann;

  static StftConfig canonical() { return {}; }

  // Throws ConfigError("invalid config: ...") when the invariants fail.
  void validate() const;

  std::size_t bins() const { return static_cast<std::size_t>(fft_size) / 2 + 1; }
  double hop_seconds() const { return static_cast<double>(hop_length) / sample_rate; }

  bool operator==(const StftConfig&) const = default;
};

struct AudioBuffer {
  std::vector<double> samples;
  int sample_rate = 44100;

  double duration_seconds() const { return static_cast<double>(samples.size()) / sample_rate; }
};

// Periodic Hann window of the configured length.
std::vector<double> analysis_window(const StftConfig& cfg);

// Frames are centered on t * hop after reflect-padding win_length / 2 samples
// on both ends, giving 1 + n / hop frames for n samples.
std::size_t frame_count(std::size_t n_samples, const StftConfig& cfg);

// Signal length that yields exactly `frames` frames when re-analyzed.
std::size_t length_for_frames(std::size_t frames, const StftConfig& cfg);

// Short-time Fourier transform, T x (fft_size / 2 + 1). Spectra are scaled by
// 2 / sum(window) so a full-scale sinusoid peaks near magnitude 1.
ComplexMatrix stft(std::span<const double> samples, const StftConfig& cfg);
ComplexMatrix stft(const AudioBuffer& audio, const StftConfig& cfg);

// Least-squares inverse of `stft`: weighted overlap-add normalized by the
// squared-window sum, with the reflect padding folded back onto the samples
// it was copied from. Output has `length` samples, or length_for_frames(T).
AudioBuffer istft(const ComplexMatrix& spec, const StftConfig& cfg, std::optional<std::size_t> length = {});

Matrix magnitude(const ComplexMatrix& spec);

}  // namespace duriano::dsp
