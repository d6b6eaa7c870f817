#include "duriano/dsp/spectrogram.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "duriano/util/error.hpp"

namespace duriano::dsp {

namespace {

void check_unit_range(const Matrix& m, const char* what) {
  for (double v : m.data())
    if (!std::isfinite(v) || v < 0.0 || v > 1.0) throw InputError(std::string(what) + ": entries must lie in [0,1]");
}

void check_compression(double floor_db, double ref_db) {
  if (!(floor_db < ref_db)) throw ConfigError("invalid config: floor_db must be below ref_db");
}

}  // namespace

void LinearSpectrogram::validate() const {
  if (frames.cols() != config.bins())
    throw InputError("linear spectrogram has " + std::to_string(frames.cols()) + " bins, expected " +
                     std::to_string(config.bins()));
  check_unit_range(frames, "linear spectrogram");
}

void MelSpectrogram::validate() const { check_unit_range(frames, "mel spectrogram"); }

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

MelFilterbank build_mel_filterbank(const StftConfig& cfg, std::size_t n_mels) {
  cfg.validate();
  const std::size_t bins = cfg.bins();
  if (n_mels < 1) throw ConfigError("invalid config: n_mels must be at least 1");
  if (n_mels > bins) throw ConfigError("invalid config: n_mels exceeds bin count");

  const double nyquist = cfg.sample_rate / 2.0;
  const double mel_max = hz_to_mel(nyquist);
  std::vector<double> edges(n_mels + 2);
  for (std::size_t i = 0; i < edges.size(); ++i)
    edges[i] = mel_to_hz(mel_max * static_cast<double>(i) / static_cast<double>(n_mels + 1));

  MelFilterbank fb;
  fb.weights = Matrix(n_mels, bins);
  fb.center_hz.assign(edges.begin() + 1, edges.end() - 1);
  const double bin_hz = static_cast<double>(cfg.sample_rate) / cfg.fft_size;
  for (std::size_t m = 0; m < n_mels; ++m) {
    const double lo = edges[m], mid = edges[m + 1], hi = edges[m + 2];
    double best = -1.0;
    std::size_t best_bin = 0;
    for (std::size_t b = 0; b < bins; ++b) {
      const double f = b * bin_hz;
      double w = 0.0;
      if (f > lo && f <= mid) w = (f - lo) / (mid - lo);
      else if (f > mid && f < hi) w = (hi - f) / (hi - mid);
      fb.weights(m, b) = w;
      // Remember the bin closest to the center in case the triangle falls
      // between two bins.
      const double closeness = -std::abs(f - mid);
      if (best < 0.0 || closeness > best) {
        best = closeness;
        best_bin = b;
      }
    }
    bool any = false;
    for (double w : fb.weights.row(m)) any = any || w > 0.0;
    if (!any) fb.weights(m, best_bin) = 1.0;
  }
  return fb;
}

Matrix linear_to_mel(const Matrix& magnitude, const MelFilterbank& fb) {
  if (magnitude.cols() != fb.weights.cols())
    throw InputError("linear_to_mel: magnitude has " + std::to_string(magnitude.cols()) + " bins, filterbank expects " +
                     std::to_string(fb.weights.cols()));
  const std::size_t n_mels = fb.weights.rows();
  Matrix out(magnitude.rows(), n_mels);
  for (std::size_t t = 0; t < magnitude.rows(); ++t) {
    const auto frame = magnitude.row(t);
    for (std::size_t m = 0; m < n_mels; ++m) {
      const auto w = fb.weights.row(m);
      double acc = 0.0;
      for (std::size_t b = 0; b < frame.size(); ++b) acc += w[b] * frame[b];
      out(t, m) = acc;
    }
  }
  return out;
}

Matrix compress_and_normalize(const Matrix& magnitude, double floor_db, double ref_db) {
  check_compression(floor_db, ref_db);
  const double eps = std::pow(10.0, floor_db / 20.0);
  Matrix out(magnitude.rows(), magnitude.cols());
  for (std::size_t i = 0; i < magnitude.size(); ++i) {
    const double m = magnitude.data()[i];
    if (m < 0.0 || std::isnan(m)) throw InputError("compress_and_normalize: magnitude must be non-negative");
    const double db = std::clamp(20.0 * std::log10(std::max(m, eps)), floor_db, ref_db);
    out.data()[i] = (db - floor_db) / (ref_db - floor_db);
  }
  return out;
}

Matrix decompress(const Matrix& normalized, double floor_db, double ref_db) {
  check_compression(floor_db, ref_db);
  Matrix out(normalized.rows(), normalized.cols());
  for (std::size_t i = 0; i < normalized.size(); ++i) {
    const double v = std::clamp(normalized.data()[i], 0.0, 1.0);
    out.data()[i] = std::pow(10.0, (floor_db + v * (ref_db - floor_db)) / 20.0);
  }
  return out;
}

SpectrogramPair analyze(const AudioBuffer& audio, const StftConfig& cfg, const MelFilterbank& fb,
                        const Compression& compression) {
  const Matrix mag = magnitude(stft(audio, cfg));
  SpectrogramPair out;
  out.linear.frames = compress_and_normalize(mag, compression);
  out.linear.config = cfg;
  out.linear.compression = compression;
  out.mel.frames = compress_and_normalize(linear_to_mel(mag, fb), compression);
  return out;
}

}  // namespace duriano::dsp
