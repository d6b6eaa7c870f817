#include "duriano/util/rounding.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "duriano/util/error.hpp"

namespace duriano {

std::vector<int> largest_remainder(std::span<const double> weights, int total) {
  if (weights.empty()) throw InputError("largest_remainder: no weights");
  if (total < 0) throw InputError("largest_remainder: negative total");
  double sum = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw InputError("largest_remainder: weights must be finite and >= 0");
    sum += w;
  }
  if (!(sum > 0.0)) throw InputError("largest_remainder: weights sum to zero");

  std::vector<int> counts(weights.size());
  std::vector<double> frac(weights.size());
  int assigned = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const double quota = weights[i] / sum * total;
    counts[i] = static_cast<int>(std::floor(quota));
    frac[i] = quota - counts[i];
    assigned += counts[i];
  }
  std::vector<std::size_t> order(weights.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return frac[a] > frac[b]; });
  for (std::size_t k = 0; assigned < total; ++k, ++assigned) ++counts[order[k % order.size()]];
  return counts;
}

}  // namespace duriano
