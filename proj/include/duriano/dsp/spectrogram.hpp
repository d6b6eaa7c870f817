#pragma once

#include <cstddef>

#include "duriano/dsp/stft.hpp"
#include "duriano/util/matrix.hpp"

namespace duriano::dsp {

inline constexpr std::size_t kMelBins = 80;

// Log-magnitude compression range. Values are mapped affinely to [0, 1].
struct Compression {
  double floor_db = -100.0;
  double ref_db = 20.0;
};

// T x fft_size/2+1 normalized log-magnitudes.
struct LinearSpectrogram {
  Matrix frames;
  StftConfig config;
  Compression compression;

  void validate() const;
};

// T x n_mels normalized log-mel magnitudes.
struct MelSpectrogram {
  Matrix frames;

  void validate() const;
};

// Triangular filters with centers equally spaced on the HTK mel scale
// (2595 log10(1 + f / 700)) between 0 Hz and Nyquist.
struct MelFilterbank {
  Matrix weights;  // n_mels x bins
  std::vector<double> center_hz;
};

double hz_to_mel(double hz);
double mel_to_hz(double mel);

MelFilterbank build_mel_filterbank(const StftConfig& cfg, std::size_t n_mels = kMelBins);

// magnitude . weights^T, applied before compression.
Matrix linear_to_mel(const Matrix& magnitude, const MelFilterbank& fb);

// 20 log10(max(mag, eps)) clipped to [floor_db, ref_db] and mapped to [0, 1].
Matrix compress_and_normalize(const Matrix& magnitude, double floor_db, double ref_db);
inline Matrix compress_and_normalize(const Matrix& magnitude, const Compression& c = {}) {
  return compress_and_normalize(magnitude, c.floor_db, c.ref_db);
}

// Inverse of compress_and_normalize for values in [0, 1].
Matrix decompress(const Matrix& normalized, double floor_db, double ref_db);
inline Matrix decompress(const Matrix& normalized, const Compression& c = {}) {
  return decompress(normalized, c.floor_db, c.ref_db);
}

struct SpectrogramPair {
  LinearSpectrogram linear;
  MelSpectrogram mel;
};

// STFT -> magnitude -> (mel) -> compression, for both training targets.
SpectrogramPair analyze(const AudioBuffer& audio, const StftConfig& cfg, const MelFilterbank& fb,
                        const Compression& compression = {});

}  // namespace duriano::dsp
