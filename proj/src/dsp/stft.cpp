#include "duriano/dsp/stft.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>
#include <numeric>
#include <string>

#include "duriano/util/error.hpp"

namespace duriano::dsp {

namespace {

// FFTW planning is not thread-safe; execution with the new-array interface is.
struct FftPlans {
  fftw_plan forward = nullptr;
  fftw_plan inverse = nullptr;
};

const FftPlans& plans_for(int n) {
  static std::mutex mutex;
  static std::map<int, FftPlans> cache;
  std::lock_guard lock(mutex);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  std::vector<double> real(static_cast<std::size_t>(n));
  std::vector<fftw_complex> spec(static_cast<std::size_t>(n) / 2 + 1);
  FftPlans p;
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  p.forward = fftw_plan_dft_r2c_1d(n, real.data(), spec.data(), flags);
  p.inverse = fftw_plan_dft_c2r_1d(n, spec.data(), real.data(), flags);
  return cache.emplace(n, p).first->second;
}

// Maps a position in the padded signal to the source sample (mirror without
// repeating the edge sample).
std::size_t mirror_index(long long i, std::size_t n) {
  if (n == 1) return 0;
  const long long period = 2 * static_cast<long long>(n - 1);
  long long m = i % period;
  if (m < 0) m += period;
  if (m >= static_cast<long long>(n)) m = period - m;
  return static_cast<std::size_t>(m);
}

double spectrum_scale(const std::vector<double>& window) {
  return 2.0 / std::accumulate(window.begin(), window.end(), 0.0);
}

}  // namespace

void StftConfig::validate() const {
  auto fail = [](const std::string& why) { throw ConfigError("invalid config: " + why); };
  if (sample_rate <= 0 || win_length <= 0 || hop_length <= 0 || fft_size <= 0) fail("all sizes must be positive");
  if (fft_size < win_length) fail("fft_size < win_length");
  if (hop_length > win_length) fail("hop_length > win_length");
}

std::vector<double> analysis_window(const StftConfig& cfg) {
  std::vector<double> w(static_cast<std::size_t>(cfg.win_length));
  for (std::size_t n = 0; n < w.size(); ++n)
    w[n] = 0.5 - 0.5 * std::cos(2.0 * M_PI * static_cast<double>(n) / static_cast<double>(w.size()));
  return w;
}

std::size_t frame_count(std::size_t n_samples, const StftConfig& cfg) {
  return 1 + n_samples / static_cast<std::size_t>(cfg.hop_length);
}

std::size_t length_for_frames(std::size_t frames, const StftConfig& cfg) {
  if (frames <= 1) return 1;
  return (frames - 1) * static_cast<std::size_t>(cfg.hop_length);
}

ComplexMatrix stft(std::span<const double> samples, const StftConfig& cfg) {
  cfg.validate();
  if (samples.empty()) throw InputError("empty input");
  const auto window = analysis_window(cfg);
  const double scale = spectrum_scale(window);
  const std::size_t n = samples.size();
  const std::size_t frames = frame_count(n, cfg);
  const std::size_t bins = cfg.bins();
  const long long pad = cfg.win_length / 2;
  const auto& plan = plans_for(cfg.fft_size);

  ComplexMatrix out(frames, bins);
  std::vector<double> buf(static_cast<std::size_t>(cfg.fft_size));
  std::vector<fftw_complex> spec(bins);
  for (std::size_t t = 0; t < frames; ++t) {
    std::fill(buf.begin(), buf.end(), 0.0);
    const long long start = static_cast<long long>(t) * cfg.hop_length - pad;
    for (std::size_t k = 0; k < window.size(); ++k)
      buf[k] = window[k] * samples[mirror_index(start + static_cast<long long>(k), n)];
    fftw_execute_dft_r2c(plan.forward, buf.data(), spec.data());
    for (std::size_t b = 0; b < bins; ++b) out(t, b) = {spec[b][0] * scale, spec[b][1] * scale};
  }
  return out;
}

ComplexMatrix stft(const AudioBuffer& audio, const StftConfig& cfg) { return stft(audio.samples, cfg); }

AudioBuffer istft(const ComplexMatrix& spec, const StftConfig& cfg, std::optional<std::size_t> length) {
  cfg.validate();
  if (spec.cols() != cfg.bins())
    throw InputError("istft: bin count " + std::to_string(spec.cols()) + " does not match config (" +
                     std::to_string(cfg.bins()) + ")");
  const std::size_t frames = spec.rows();
  const std::size_t n = length.value_or(length_for_frames(frames, cfg));
  if (n == 0) throw InputError("istft: zero output length");
  if (frame_count(n, cfg) != frames)
    throw InputError("istft: length " + std::to_string(n) + " inconsistent with " + std::to_string(frames) + " frames");

  const auto window = analysis_window(cfg);
  const double inv_scale = 1.0 / spectrum_scale(window);
  const double inv_fft = 1.0 / cfg.fft_size;
  const long long pad = cfg.win_length / 2;
  const auto& plan = plans_for(cfg.fft_size);

  std::vector<double> num(n, 0.0), den(n, 0.0);
  std::vector<fftw_complex> buf(cfg.bins());
  std::vector<double> frame(static_cast<std::size_t>(cfg.fft_size));
  for (std::size_t t = 0; t < frames; ++t) {
    for (std::size_t b = 0; b < cfg.bins(); ++b) {
      buf[b][0] = spec(t, b).real() * inv_scale;
      buf[b][1] = spec(t, b).imag() * inv_scale;
    }
    fftw_execute_dft_c2r(plan.inverse, buf.data(), frame.data());
    const long long start = static_cast<long long>(t) * cfg.hop_length - pad;
    for (std::size_t k = 0; k < window.size(); ++k) {
      const std::size_t src = mirror_index(start + static_cast<long long>(k), n);
      num[src] += window[k] * frame[k] * inv_fft;
      den[src] += window[k] * window[k];
    }
  }
  AudioBuffer out;
  out.sample_rate = cfg.sample_rate;
  out.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.samples[i] = den[i] > 1e-12 ? num[i] / den[i] : 0.0;
  return out;
}

Matrix magnitude(const ComplexMatrix& spec) {
  Matrix out(spec.rows(), spec.cols());
  for (std::size_t i = 0; i < spec.size(); ++i) out.data()[i] = std::abs(spec.data()[i]);
  return out;
}

}  // namespace duriano::dsp
