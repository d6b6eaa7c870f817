#include "duriano/pitch/yin.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "duriano/util/error.hpp"

namespace duriano::pitch {

std::size_t PitchContour::voiced_count() const {
  return static_cast<std::size_t>(std::count_if(f0.begin(), f0.end(), [](double v) { return v > 0.0; }));
}

double hz_to_midi(double f0) {
  if (!(f0 > 0.0)) throw InputError("hz_to_midi: frequency must be positive");
  return 69.0 + 12.0 * std::log2(f0 / 440.0);
}

double midi_to_hz(double midi) { return 440.0 * std::exp2((midi - 69.0) / 12.0); }

namespace {

struct YinGeometry {
  std::size_t tau_min;
  std::size_t tau_max;
  std::size_t integration;
  std::size_t frame_length() const { return integration + tau_max; }
};

YinGeometry geometry(int sample_rate, double fmin, double fmax) {
  YinGeometry g;
  g.tau_min = std::max<std::size_t>(2, static_cast<std::size_t>(std::floor(sample_rate / fmax)));
  g.tau_max = static_cast<std::size_t>(std::ceil(sample_rate / fmin)) + 1;
  g.integration = g.tau_max;
  return g;
}

double yin_frame(const double* x, const YinGeometry& g, int sample_rate, double threshold, std::vector<double>& diff) {
  double energy = 0.0;
  for (std::size_t j = 0; j < g.frame_length(); ++j) energy += x[j] * x[j];
  if (energy < 1e-10 * static_cast<double>(g.frame_length())) return 0.0;

  diff.assign(g.tau_max + 2, 0.0);
  for (std::size_t tau = 1; tau <= g.tau_max; ++tau) {
    double acc = 0.0;
    for (std::size_t j = 0; j < g.integration; ++j) {
      const double d = x[j] - x[j + tau];
      acc += d * d;
    }
    diff[tau] = acc;
  }
  // Cumulative-mean-normalized difference, in place.
  diff[0] = 1.0;
  double running = 0.0;
  for (std::size_t tau = 1; tau <= g.tau_max; ++tau) {
    running += diff[tau];
    diff[tau] = running > 0.0 ? diff[tau] * static_cast<double>(tau) / running : 1.0;
  }

  std::size_t tau = g.tau_min;
  for (; tau < g.tau_max; ++tau) {
    if (diff[tau] < threshold) {
      while (tau + 1 < g.tau_max && diff[tau + 1] < diff[tau]) ++tau;
      break;
    }
  }
  if (tau >= g.tau_max) return 0.0;

  double shift = 0.0;
  const double a = diff[tau - 1], b = diff[tau], c = diff[tau + 1];
  const double denom = a - 2.0 * b + c;
  if (std::abs(denom) > 1e-12) shift = std::clamp(0.5 * (a - c) / denom, -0.5, 0.5);
  return sample_rate / (static_cast<double>(tau) + shift);
}

}  // namespace

std::vector<double> yin_candidates(const dsp::AudioBuffer& audio, int hop, double fmin, double fmax,
                                   double threshold) {
  if (!(fmin > 0.0) || !(fmin < fmax)) throw ConfigError("invalid config: need 0 < fmin < fmax");
  if (hop <= 0) throw ConfigError("invalid config: hop must be positive");
  const YinGeometry g = geometry(audio.sample_rate, fmin, fmax);
  const std::size_t n = audio.samples.size();
  if (n < g.frame_length())
    throw InputError("audio shorter than one analysis window (" + std::to_string(g.frame_length()) + " samples)");

  const std::size_t frames = 1 + n / static_cast<std::size_t>(hop);
  std::vector<double> out(frames, 0.0);
  std::vector<double> diff;
  for (std::size_t t = 0; t < frames; ++t) {
    const long long centered = static_cast<long long>(t) * hop - static_cast<long long>(g.frame_length() / 2);
    const auto start = static_cast<std::size_t>(
        std::clamp<long long>(centered, 0, static_cast<long long>(n - g.frame_length())));
    double f = yin_frame(audio.samples.data() + start, g, audio.sample_rate, threshold, diff);
    if (f < fmin || f > fmax) f = 0.0;
    out[t] = f;
  }
  return out;
}

PitchContour extract_f0(const dsp::AudioBuffer& audio, int hop, double fmin, double fmax, const YinOptions& options) {
  const std::vector<double> raw = yin_candidates(audio, hop, fmin, fmax, options.threshold);

  const double midi_lo = hz_to_midi(fmin);
  const double midi_hi = hz_to_midi(fmax);
  const double bin_width = 1.0 / options.bins_per_semitone;
  const auto bins = static_cast<std::size_t>(std::floor((midi_hi - midi_lo) / bin_width)) + 1;
  const std::size_t unvoiced = bins;
  const std::size_t states = bins + 1;
  const double step = options.jump_cost * bin_width;
  const double inf = std::numeric_limits<double>::infinity();

  auto emission = [&](std::size_t t, std::size_t s) {
    const bool observed = raw[t] > 0.0;
    if (s == unvoiced) return observed ? options.unvoiced_cost : 0.0;
    if (!observed) return options.dropout_cost;
    const double d = (midi_lo + s * bin_width) - hz_to_midi(raw[t]);
    return std::min(d * d / (2.0 * options.emission_sigma * options.emission_sigma), options.outlier_cost);
  };

  const std::size_t frames = raw.size();
  std::vector<double> cost(states), next(states), relaxed(states);
  std::vector<std::size_t> from(states);
  std::vector<std::vector<std::uint32_t>> back(frames, std::vector<std::uint32_t>(states));
  for (std::size_t s = 0; s < states; ++s) cost[s] = emission(0, s);

  for (std::size_t t = 1; t < frames; ++t) {
    // Linear jump cost: two-pass distance transform over the voiced bins.
    for (std::size_t s = 0; s < bins; ++s) {
      relaxed[s] = cost[s];
      from[s] = s;
      if (s > 0 && relaxed[s - 1] + step < relaxed[s]) {
        relaxed[s] = relaxed[s - 1] + step;
        from[s] = from[s - 1];
      }
    }
    for (std::size_t s = bins - 1; s-- > 0;) {
      if (relaxed[s + 1] + step < relaxed[s]) {
        relaxed[s] = relaxed[s + 1] + step;
        from[s] = from[s + 1];
      }
    }
    double best_voiced = inf;
    std::size_t best_voiced_state = 0;
    for (std::size_t s = 0; s < bins; ++s)
      if (cost[s] < best_voiced) {
        best_voiced = cost[s];
        best_voiced_state = s;
      }
    for (std::size_t s = 0; s < bins; ++s) {
      double c = relaxed[s];
      std::size_t arg = from[s];
      const double via_unvoiced = cost[unvoiced] + options.voicing_switch_cost;
      if (via_unvoiced < c) {
        c = via_unvoiced;
        arg = unvoiced;
      }
      next[s] = c + emission(t, s);
      back[t][s] = static_cast<std::uint32_t>(arg);
    }
    {
      double c = cost[unvoiced];
      std::size_t arg = unvoiced;
      if (best_voiced + options.voicing_switch_cost < c) {
        c = best_voiced + options.voicing_switch_cost;
        arg = best_voiced_state;
      }
      next[unvoiced] = c + emission(t, unvoiced);
      back[t][unvoiced] = static_cast<std::uint32_t>(arg);
    }
    cost.swap(next);
  }

  std::size_t state = static_cast<std::size_t>(std::min_element(cost.begin(), cost.end()) - cost.begin());
  PitchContour contour;
  contour.hop_seconds = static_cast<double>(hop) / audio.sample_rate;
  contour.f0.assign(frames, 0.0);
  for (std::size_t t = frames; t-- > 0;) {
    if (state != unvoiced) {
      const double bin_midi = midi_lo + state * bin_width;
      if (raw[t] > 0.0 && std::abs(hz_to_midi(raw[t]) - bin_midi) <= 1.0)
        contour.f0[t] = raw[t];
      else
        contour.f0[t] = std::clamp(midi_to_hz(bin_midi), fmin, fmax);
    }
    if (t > 0) state = back[t][state];
  }
  return contour;
}

}  // namespace duriano::pitch
