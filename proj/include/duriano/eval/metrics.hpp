#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "duriano/dsp/stft.hpp"
#include "duriano/pitch/yin.hpp"

namespace duriano::eval {

using pitch::PitchContour;

struct GaussianFit {
  double mu = 0.0;
  double sigma = 0.0;
};

// Sample Pearson coefficient of two equal-length sequences. Throws
// InputError("degenerate contour") when either has zero variance.
double pearson(std::span<const double> x, std::span<const double> y);
// Pearson over the frames voiced (f0 > 0) in both contours.
double pearson_voiced(std::span<const double> x, std::span<const double> y);

// Linear interpolation between voiced neighbours; anything touching an
// unvoiced frame takes the nearest source frame.
std::vector<double> resample_contour(std::span<const double> x, std::size_t target_length);

// Voiced frames divided by their mean; unvoiced frames are dropped.
std::vector<double> normalize_mean_one(std::span<const double> x);

// Maximum-likelihood mean and (population) standard deviation.
GaussianFit fit_gaussian(std::span<const double> samples);

using ContourSet = std::vector<std::pair<std::string, PitchContour>>;

struct EvalReport {
  std::vector<std::string> labels;
  std::vector<std::vector<double>> correlation;  // symmetric, unit diagonal
  std::vector<GaussianFit> fits;
};

// Pairwise correlations after resampling each pair to the shorter length,
// and a Gaussian fit of every mean-normalized contour.
EvalReport eval_report(const ContourSet& contours);

// Correlation matrix block, a blank line, then `system<TAB>mu<TAB>sigma`.
void write_report(std::ostream& os, const EvalReport& report);
std::string format_report(const EvalReport& report);

struct ContourOptions {
  int hop = 441;
  double fmin = 65.0;
  double fmax = 1050.0;
};

PitchContour contour_from_audio(const dsp::AudioBuffer& audio, const ContourOptions& options = {});

}  // namespace duriano::eval
