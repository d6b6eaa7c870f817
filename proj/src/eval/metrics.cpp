#include "duriano/eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>

#include "duriano/util/error.hpp"

namespace duriano::eval {

namespace {

// Neumaier-compensated sum.
double accurate_sum(std::span<const double> v) {
  double sum = 0.0, comp = 0.0;
  for (double x : v) {
    const double t = sum + x;
    comp += std::abs(sum) >= std::abs(x) ? (sum - t) + x : (x - t) + sum;
    sum = t;
  }
  return sum + comp;
}

}  // namespace

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw InputError("pearson: lengths differ (" + std::to_string(x.size()) + " vs " +
                                             std::to_string(y.size()) + ")");
  if (x.size() < 2) throw InputError("degenerate contour: fewer than 2 frames");
  const double n = static_cast<double>(x.size());
  const double mx = accurate_sum(x) / n;
  const double my = accurate_sum(y) / n;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) throw InputError("degenerate contour");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double pearson_voiced(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw InputError("pearson: lengths differ (" + std::to_string(x.size()) + " vs " +
                                             std::to_string(y.size()) + ")");
  std::vector<double> a, b;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] > 0.0 && y[i] > 0.0) {
      a.push_back(x[i]);
      b.push_back(y[i]);
    }
  }
  return pearson(a, b);
}

std::vector<double> resample_contour(std::span<const double> x, std::size_t target_length) {
  if (target_length < 2) throw InputError("resample_contour: target length must be >= 2");
  if (x.empty()) throw InputError("resample_contour: empty contour");
  if (x.size() == target_length) return {x.begin(), x.end()};
  std::vector<double> out(target_length);
  if (x.size() == 1) {
    std::fill(out.begin(), out.end(), x[0]);
    return out;
  }
  const double scale = static_cast<double>(x.size() - 1) / static_cast<double>(target_length - 1);
  for (std::size_t i = 0; i < target_length; ++i) {
    const double p = static_cast<double>(i) * scale;
    const std::size_t lo = std::min(static_cast<std::size_t>(p), x.size() - 1);
    const std::size_t hi = std::min(lo + 1, x.size() - 1);
    const double frac = p - static_cast<double>(lo);
    if (x[lo] > 0.0 && x[hi] > 0.0)
      out[i] = x[lo] + frac * (x[hi] - x[lo]);
    else
      out[i] = x[frac < 0.5 ? lo : hi];
  }
  return out;
}

std::vector<double> normalize_mean_one(std::span<const double> x) {
  std::vector<double> voiced;
  for (double v : x)
    if (v > 0.0) voiced.push_back(v);
  if (voiced.empty()) throw InputError("normalize_mean_one: contour has no voiced frames");
  const double mean = accurate_sum(voiced) / static_cast<double>(voiced.size());
  for (double& v : voiced) v /= mean;
  return voiced;
}

GaussianFit fit_gaussian(std::span<const double> samples) {
  if (samples.size() < 2) throw InputError("fit_gaussian: at least 2 samples required");
  const double n = static_cast<double>(samples.size());
  GaussianFit fit;
  fit.mu = accurate_sum(samples) / n;
  std::vector<double> sq(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) sq[i] = (samples[i] - fit.mu) * (samples[i] - fit.mu);
  fit.sigma = std::sqrt(accurate_sum(sq) / n);
  return fit;
}

EvalReport eval_report(const ContourSet& contours) {
  if (contours.size() < 2) throw InputError("eval_report: at least two systems are required");
  const std::size_t n = contours.size();
  EvalReport report;
  report.correlation.assign(n, std::vector<double>(n, 1.0));
  for (const auto& [label, contour] : contours) {
    report.labels.push_back(label);
    report.fits.push_back(fit_gaussian(normalize_mean_one(contour.f0)));
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const auto& a = contours[i].second.f0;
      const auto& b = contours[j].second.f0;
      const std::size_t len = std::min(a.size(), b.size());
      const double r = pearson_voiced(resample_contour(a, len), resample_contour(b, len));
      report.correlation[i][j] = report.correlation[j][i] = r;
    }
  }
  return report;
}

void write_report(std::ostream& os, const EvalReport& report) {
  char buf[32];
  os << "system";
  for (const auto& l : report.labels) os << '\t' << l;
  os << '\n';
  for (std::size_t i = 0; i < report.labels.size(); ++i) {
    os << report.labels[i];
    for (double r : report.correlation[i]) {
      std::snprintf(buf, sizeof buf, "%.4f", r);
      os << '\t' << buf;
    }
    os << '\n';
  }
  os << "\nsystem\tmu\tsigma\n";
  for (std::size_t i = 0; i < report.labels.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.4f", report.fits[i].mu);
    os << report.labels[i] << '\t' << buf;
    std::snprintf(buf, sizeof buf, "%.4f", report.fits[i].sigma);
    os << '\t' << buf << '\n';
  }
}

std::string format_report(const EvalReport& report) {
  std::ostringstream os;
  write_report(os, report);
  return os.str();
}

PitchContour contour_from_audio(const dsp::AudioBuffer& audio, const ContourOptions& options) {
  return pitch::extract_f0(audio, options.hop, options.fmin, options.fmax);
}

}  // namespace duriano::eval
