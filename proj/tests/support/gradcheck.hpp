#pragma once

// Central finite-difference oracle for the autograd engine.

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "duriano/nn/autograd.hpp"
#include "duriano/nn/ops.hpp"
#include "duriano/util/rng.hpp"

namespace testsupport {

using duriano::nn::Tensor;
using duriano::nn::Var;

struct GradLeaf {
  std::string name;
  Var var;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst;
  std::size_t checked = 0;
  // Probes whose interval [x - eps, x + eps] straddles a non-differentiable
  // point (ReLU or max-pool switch); see check_gradients.
  std::size_t kinks = 0;
  std::string kink_example;
};

// Relative error with a small absolute floor so that gradients that are
// zero in both computations compare equal.
inline double relative_error(double analytic, double numeric, double floor = 1e-4) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

// `scalar` must rebuild the graph from the leaves on every call and return a
// 1x1 value. At most `per_leaf` entries of each leaf are probed (0 = all),
// chosen with `seed`.
//
// A probe that misses at `eps` is repeated at eps / 10. When the finer
// estimate matches the analytic value while the two estimates disagree with
// each other, the coarse interval contained a kink and the probe is counted
// in `kinks` instead of the error statistics. A wrong analytic gradient
// leaves both estimates in agreement and is still reported.
inline GradCheckResult check_gradients(const std::function<Var()>& scalar, const std::vector<GradLeaf>& leaves,
                                       std::size_t per_leaf = 0, std::uint64_t seed = 1, double eps = 1e-5) {
  for (const auto& l : leaves) {
    Var v = l.var;
    v.zero_grad();
  }
  duriano::nn::backward(scalar());
  std::vector<Tensor> analytic;
  for (const auto& l : leaves)
    analytic.push_back(l.var.has_grad() ? l.var.grad() : Tensor(l.var.rows(), l.var.cols()));

  GradCheckResult result;
  duriano::Rng rng(seed);
  duriano::nn::NoGradGuard no_grad;
  for (std::size_t li = 0; li < leaves.size(); ++li) {
    Var v = leaves[li].var;
    Tensor& value = v.value();
    std::vector<std::size_t> entries;
    if (per_leaf == 0 || per_leaf >= value.size()) {
      for (std::size_t i = 0; i < value.size(); ++i) entries.push_back(i);
    } else {
      for (std::size_t k = 0; k < per_leaf; ++k) entries.push_back(rng.below(value.size()));
    }
    const auto central = [&](std::size_t i, double h) {
      const double saved = value[i];
      value[i] = saved + h;
      const double up = scalar().value()[0];
      value[i] = saved - h;
      const double down = scalar().value()[0];
      value[i] = saved;
      return (up - down) / (2.0 * h);
    };
    for (std::size_t i : entries) {
      const double numeric = central(i, eps);
      double err = relative_error(analytic[li][i], numeric);
      ++result.checked;
      if (err >= 1e-4) {
        const double fine = central(i, eps / 10.0);
        if (relative_error(analytic[li][i], fine) < 1e-4 && relative_error(fine, numeric) >= 1e-4) {
          if (result.kinks++ == 0)
            result.kink_example = leaves[li].name + "[" + std::to_string(i) + "] analytic " +
                                  std::to_string(analytic[li][i]) + " numeric " + std::to_string(numeric) + " fine " +
                                  std::to_string(fine);
          continue;
        }
      }
      if (err > result.max_rel_error) {
        result.max_rel_error = err;
        result.worst = leaves[li].name + "[" + std::to_string(i) + "] analytic " + std::to_string(analytic[li][i]) +
                       " numeric " + std::to_string(numeric);
      }
    }
  }
  return result;
}

inline Tensor random_tensor(std::size_t rows, std::size_t cols, duriano::Rng& rng, double scale = 1.0) {
  Tensor t(rows, cols);
  for (auto& v : t.values()) v = rng.uniform(-scale, scale);
  return t;
}

// Projects a tensor-valued output to a scalar with fixed random weights.
inline std::function<Var(const Var&)> random_projection(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  duriano::Rng rng(seed);
  Tensor w = random_tensor(rows, cols, rng);
  return [w](const Var& out) { return duriano::nn::dot(out, w); };
}

}  // namespace testsupport
