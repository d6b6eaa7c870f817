#include "duriano/nn/ops.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <string>

#include "duriano/util/error.hpp"

namespace duriano::nn {

namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMajor>;
using MutMap = Eigen::Map<RowMajor>;

ConstMap view(const Tensor& t) { return ConstMap(t.data(), static_cast<Eigen::Index>(t.rows()), static_cast<Eigen::Index>(t.cols())); }
MutMap view(Tensor& t) { return MutMap(t.data(), static_cast<Eigen::Index>(t.rows()), static_cast<Eigen::Index>(t.cols())); }

[[noreturn]] void shape_error(const char* op, const Tensor& a, const Tensor& b) {
  throw InputError(std::string(op) + ": shape mismatch " + a.shape_string() + " vs " + b.shape_string());
}

Tensor& in_grad(Node& self, std::size_t i) { return self.inputs[i]->grad_buffer(); }
bool wants(Node& self, std::size_t i) { return self.inputs[i]->requires_grad; }

template <typename F, typename DF>
Var unary(const Var& a, F f, DF df) {
  Tensor out(a.rows(), a.cols());
  const Tensor& x = a.value();
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = f(x[i]);
  return record(std::move(out), {a}, [df](Node& self) {
    const Tensor& x = self.inputs[0]->value;
    Tensor& g = in_grad(self, 0);
    for (std::size_t i = 0; i < x.size(); ++i) g[i] += self.grad[i] * df(x[i], self.value[i]);
  });
}

}  // namespace

Var constant(Tensor value) { return Var(std::move(value), false); }

Var matmul(const Var& a, const Var& b) {
  if (a.cols() != b.rows()) shape_error("matmul", a.value(), b.value());
  Tensor out(a.rows(), b.cols());
  view(out).noalias() = view(a.value()) * view(b.value());
  return record(std::move(out), {a, b}, [](Node& self) {
    const auto g = view(static_cast<const Tensor&>(self.grad));
    if (wants(self, 0)) view(in_grad(self, 0)).noalias() += g * view(self.inputs[1]->value).transpose();
    if (wants(self, 1)) view(in_grad(self, 1)).noalias() += view(self.inputs[0]->value).transpose() * g;
  });
}

Var add(const Var& a, const Var& b) {
  const bool broadcast = b.rows() == 1 && a.rows() != 1 && a.cols() == b.cols();
  if (!broadcast && !a.value().same_shape(b.value())) shape_error("add", a.value(), b.value());
  Tensor out = a.value();
  const std::size_t cols = a.cols();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b.value()[broadcast ? i % cols : i];
  return record(std::move(out), {a, b}, [broadcast, cols](Node& self) {
    if (wants(self, 0)) {
      Tensor& g = in_grad(self, 0);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
    if (wants(self, 1)) {
      Tensor& g = in_grad(self, 1);
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[broadcast ? i % cols : i] += self.grad[i];
    }
  });
}

Var sub(const Var& a, const Var& b) {
  if (!a.value().same_shape(b.value())) shape_error("sub", a.value(), b.value());
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b.value()[i];
  return record(std::move(out), {a, b}, [](Node& self) {
    if (wants(self, 0)) {
      Tensor& g = in_grad(self, 0);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
    if (wants(self, 1)) {
      Tensor& g = in_grad(self, 1);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] -= self.grad[i];
    }
  });
}

Var mul(const Var& a, const Var& b) {
  if (!a.value().same_shape(b.value())) shape_error("mul", a.value(), b.value());
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b.value()[i];
  return record(std::move(out), {a, b}, [](Node& self) {
    const Tensor& x = self.inputs[0]->value;
    const Tensor& y = self.inputs[1]->value;
    if (wants(self, 0)) {
      Tensor& g = in_grad(self, 0);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * y[i];
    }
    if (wants(self, 1)) {
      Tensor& g = in_grad(self, 1);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * x[i];
    }
  });
}

Var affine(const Var& a, double scale, double shift) {
  return unary(a, [=](double x) { return scale * x + shift; }, [=](double, double) { return scale; });
}

Var sigmoid(const Var& a) {
  return unary(
      a, [](double x) { return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); },
      [](double, double y) { return y * (1.0 - y); });
}

Var tanh(const Var& a) {
  return unary(a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Var relu(const Var& a) {
  return unary(a, [](double x) { return x > 0.0 ? x : 0.0; }, [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw InputError("concat_cols: no inputs");
  const std::size_t rows = parts[0].rows();
  std::size_t cols = 0;
  for (const auto& p : parts) {
    if (p.rows() != rows) shape_error("concat_cols", parts[0].value(), p.value());
    cols += p.cols();
  }
  Tensor out(rows, cols);
  std::size_t offset = 0;
  for (const auto& p : parts) {
    for (std::size_t r = 0; r < rows; ++r) std::copy_n(p.value().row(r).data(), p.cols(), out.row(r).data() + offset);
    offset += p.cols();
  }
  return record(std::move(out), parts, [](Node& self) {
    std::size_t offset = 0;
    for (std::size_t i = 0; i < self.inputs.size(); ++i) {
      const std::size_t c = self.inputs[i]->value.cols();
      if (wants(self, i)) {
        Tensor& g = in_grad(self, i);
        for (std::size_t r = 0; r < g.rows(); ++r)
          for (std::size_t k = 0; k < c; ++k) g(r, k) += self.grad(r, offset + k);
      }
      offset += c;
    }
  });
}

Var concat_rows(const std::vector<Var>& parts) {
  if (parts.empty()) throw InputError("concat_rows: no inputs");
  const std::size_t cols = parts[0].cols();
  std::size_t rows = 0;
  for (const auto& p : parts) {
    if (p.cols() != cols) shape_error("concat_rows", parts[0].value(), p.value());
    rows += p.rows();
  }
  Tensor out(rows, cols);
  std::size_t offset = 0;
  for (const auto& p : parts) {
    std::copy(p.value().values().begin(), p.value().values().end(), out.data() + offset * cols);
    offset += p.rows();
  }
  return record(std::move(out), parts, [](Node& self) {
    std::size_t offset = 0;
    for (std::size_t i = 0; i < self.inputs.size(); ++i) {
      const std::size_t n = self.inputs[i]->value.size();
      if (wants(self, i)) {
        Tensor& g = in_grad(self, i);
        for (std::size_t k = 0; k < n; ++k) g[k] += self.grad[offset + k];
      }
      offset += n;
    }
  });
}

Var slice_cols(const Var& a, std::size_t begin, std::size_t count) {
  if (begin + count > a.cols()) throw InputError("slice_cols: range beyond " + a.value().shape_string());
  Tensor out(a.rows(), count);
  for (std::size_t r = 0; r < a.rows(); ++r) std::copy_n(a.value().row(r).data() + begin, count, out.row(r).data());
  return record(std::move(out), {a}, [begin, count](Node& self) {
    Tensor& g = in_grad(self, 0);
    for (std::size_t r = 0; r < g.rows(); ++r)
      for (std::size_t k = 0; k < count; ++k) g(r, begin + k) += self.grad(r, k);
  });
}

Var slice_rows(const Var& a, std::size_t begin, std::size_t count) {
  if (begin + count > a.rows()) throw InputError("slice_rows: range beyond " + a.value().shape_string());
  const std::size_t cols = a.cols();
  Tensor out(count, cols);
  std::copy_n(a.value().data() + begin * cols, count * cols, out.data());
  return record(std::move(out), {a}, [begin, cols](Node& self) {
    Tensor& g = in_grad(self, 0);
    for (std::size_t k = 0; k < self.grad.size(); ++k) g[begin * cols + k] += self.grad[k];
  });
}

Var reshape(const Var& a, std::size_t rows, std::size_t cols) {
  if (rows * cols != a.value().size()) throw InputError("reshape: size mismatch for " + a.value().shape_string());
  Tensor out(rows, cols, a.value().values());
  return record(std::move(out), {a}, [](Node& self) {
    Tensor& g = in_grad(self, 0);
    for (std::size_t k = 0; k < g.size(); ++k) g[k] += self.grad[k];
  });
}

Var reverse_rows(const Var& a) {
  const std::size_t rows = a.rows(), cols = a.cols();
  Tensor out(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) std::copy_n(a.value().row(rows - 1 - r).data(), cols, out.row(r).data());
  return record(std::move(out), {a}, [rows, cols](Node& self) {
    Tensor& g = in_grad(self, 0);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c) g(rows - 1 - r, c) += self.grad(r, c);
  });
}

Var gather_rows(const Var& table, std::span<const int> ids) {
  const std::size_t cols = table.cols();
  Tensor out(ids.size(), cols);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || static_cast<std::size_t>(ids[i]) >= table.rows())
      throw InputError("embedding id " + std::to_string(ids[i]) + " out of range [0, " + std::to_string(table.rows()) + ")");
    std::copy_n(table.value().row(static_cast<std::size_t>(ids[i])).data(), cols, out.row(i).data());
  }
  std::vector<int> idx(ids.begin(), ids.end());
  return record(std::move(out), {table}, [idx = std::move(idx), cols](Node& self) {
    Tensor& g = in_grad(self, 0);
    for (std::size_t i = 0; i < idx.size(); ++i)
      for (std::size_t c = 0; c < cols; ++c) g(static_cast<std::size_t>(idx[i]), c) += self.grad(i, c);
  });
}

Var repeat_rows(const Var& a, std::span<const int> counts) {
  if (counts.size() != a.rows()) throw InputError("repeat_rows: one count per row required");
  std::vector<int> src;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (counts[i] < 1) throw InputError("repeat_rows: counts must be >= 1");
    src.insert(src.end(), static_cast<std::size_t>(counts[i]), static_cast<int>(i));
  }
  return gather_rows(a, src);
}

Var unfold_same(const Var& x, std::size_t k) {
  if (k < 1) throw InputError("unfold_same: kernel size must be >= 1");
  const std::size_t rows = x.rows(), c = x.cols();
  const long long left = static_cast<long long>((k - 1) / 2);
  Tensor out(rows, k * c);
  for (std::size_t t = 0; t < rows; ++t)
    for (std::size_t j = 0; j < k; ++j) {
      const long long src = static_cast<long long>(t) + static_cast<long long>(j) - left;
      if (src < 0 || src >= static_cast<long long>(rows)) continue;
      std::copy_n(x.value().row(static_cast<std::size_t>(src)).data(), c, out.row(t).data() + j * c);
    }
  return record(std::move(out), {x}, [k, left](Node& self) {
    Tensor& g = in_grad(self, 0);
    const std::size_t rows = g.rows(), c = g.cols();
    for (std::size_t t = 0; t < rows; ++t)
      for (std::size_t j = 0; j < k; ++j) {
        const long long src = static_cast<long long>(t) + static_cast<long long>(j) - left;
        if (src < 0 || src >= static_cast<long long>(rows)) continue;
        auto dst = g.row(static_cast<std::size_t>(src));
        for (std::size_t ch = 0; ch < c; ++ch) dst[ch] += self.grad(t, j * c + ch);
      }
  });
}

Var max_pool_pairs(const Var& x) {
  const std::size_t rows = x.rows(), cols = x.cols();
  Tensor out(rows, cols);
  std::vector<std::size_t> arg(rows * cols);
  for (std::size_t t = 0; t < rows; ++t)
    for (std::size_t c = 0; c < cols; ++c) {
      std::size_t best = t;
      if (t + 1 < rows && x.value()(t + 1, c) > x.value()(t, c)) best = t + 1;
      out(t, c) = x.value()(best, c);
      arg[t * cols + c] = best;
    }
  return record(std::move(out), {x}, [arg = std::move(arg), cols](Node& self) {
    Tensor& g = in_grad(self, 0);
    for (std::size_t i = 0; i < arg.size(); ++i) g(arg[i], i % cols) += self.grad[i];
  });
}

Var batch_norm_train(const Var& x, const Var& gamma, const Var& beta, double eps) {
  const std::size_t rows = x.rows(), cols = x.cols();
  if (gamma.rows() != 1 || gamma.cols() != cols || !gamma.value().same_shape(beta.value()))
    shape_error("batch_norm", x.value(), gamma.value());
  std::vector<double> mean(cols, 0.0), inv_std(cols, 0.0);
  Tensor xhat(rows, cols);
  for (std::size_t c = 0; c < cols; ++c) {
    double m = 0.0;
    for (std::size_t t = 0; t < rows; ++t) m += x.value()(t, c);
    m /= static_cast<double>(rows);
    double v = 0.0;
    for (std::size_t t = 0; t < rows; ++t) v += (x.value()(t, c) - m) * (x.value()(t, c) - m);
    v /= static_cast<double>(rows);
    mean[c] = m;
    inv_std[c] = 1.0 / std::sqrt(v + eps);
    for (std::size_t t = 0; t < rows; ++t) xhat(t, c) = (x.value()(t, c) - m) * inv_std[c];
  }
  Tensor out(rows, cols);
  for (std::size_t t = 0; t < rows; ++t)
    for (std::size_t c = 0; c < cols; ++c) out(t, c) = gamma.value()[c] * xhat(t, c) + beta.value()[c];
  return record(std::move(out), {x, gamma, beta}, [xhat = std::move(xhat), inv_std = std::move(inv_std)](Node& self) {
    const std::size_t rows = xhat.rows(), cols = xhat.cols();
    const Tensor& gam = self.inputs[1]->value;
    for (std::size_t c = 0; c < cols; ++c) {
      double sum_g = 0.0, sum_gx = 0.0;
      for (std::size_t t = 0; t < rows; ++t) {
        sum_g += self.grad(t, c);
        sum_gx += self.grad(t, c) * xhat(t, c);
      }
      if (wants(self, 1)) in_grad(self, 1)[c] += sum_gx;
      if (wants(self, 2)) in_grad(self, 2)[c] += sum_g;
      if (wants(self, 0)) {
        Tensor& g = in_grad(self, 0);
        const double n = static_cast<double>(rows);
        for (std::size_t t = 0; t < rows; ++t)
          g(t, c) += gam[c] * inv_std[c] * (self.grad(t, c) - sum_g / n - xhat(t, c) * sum_gx / n);
      }
    }
  });
}

Var batch_norm_fixed(const Var& x, const Var& gamma, const Var& beta, const Tensor& mean, const Tensor& var,
                     double eps) {
  const std::size_t rows = x.rows(), cols = x.cols();
  if (gamma.cols() != cols || mean.cols() != cols || var.cols() != cols) shape_error("batch_norm", x.value(), gamma.value());
  std::vector<double> inv_std(cols);
  for (std::size_t c = 0; c < cols; ++c) inv_std[c] = 1.0 / std::sqrt(var[c] + eps);
  Tensor xhat(rows, cols), out(rows, cols);
  for (std::size_t t = 0; t < rows; ++t)
    for (std::size_t c = 0; c < cols; ++c) {
      xhat(t, c) = (x.value()(t, c) - mean[c]) * inv_std[c];
      out(t, c) = gamma.value()[c] * xhat(t, c) + beta.value()[c];
    }
  return record(std::move(out), {x, gamma, beta}, [xhat = std::move(xhat), inv_std = std::move(inv_std)](Node& self) {
    const Tensor& gam = self.inputs[1]->value;
    for (std::size_t t = 0; t < xhat.rows(); ++t)
      for (std::size_t c = 0; c < xhat.cols(); ++c) {
        const double g = self.grad(t, c);
        if (wants(self, 0)) in_grad(self, 0)(t, c) += g * gam[c] * inv_std[c];
        if (wants(self, 1)) in_grad(self, 1)[c] += g * xhat(t, c);
        if (wants(self, 2)) in_grad(self, 2)[c] += g;
      }
  });
}

Var sum(const Var& a) {
  double s = 0.0;
  for (double v : a.value().values()) s += v;
  return record(Tensor(1, 1, s), {a}, [](Node& self) {
    Tensor& g = in_grad(self, 0);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[0];
  });
}

Var sum_abs_diff(const Var& a, const Tensor& target) {
  if (!a.value().same_shape(target)) shape_error("l1", a.value(), target);
  double s = 0.0;
  for (std::size_t i = 0; i < target.size(); ++i) s += std::abs(a.value()[i] - target[i]);
  return record(Tensor(1, 1, s), {a}, [target](Node& self) {
    Tensor& g = in_grad(self, 0);
    const Tensor& x = self.inputs[0]->value;
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double d = x[i] - target[i];
      g[i] += self.grad[0] * static_cast<double>((d > 0.0) - (d < 0.0));
    }
  });
}

Var sum_squares(const Var& a) {
  double s = 0.0;
  for (double v : a.value().values()) s += v * v;
  return record(Tensor(1, 1, s), {a}, [](Node& self) {
    Tensor& g = in_grad(self, 0);
    const Tensor& x = self.inputs[0]->value;
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += 2.0 * x[i] * self.grad[0];
  });
}

Var dot(const Var& a, const Tensor& weights) {
  if (!a.value().same_shape(weights)) shape_error("dot", a.value(), weights);
  double s = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) s += a.value()[i] * weights[i];
  return record(Tensor(1, 1, s), {a}, [weights](Node& self) {
    Tensor& g = in_grad(self, 0);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += weights[i] * self.grad[0];
  });
}

}  // namespace duriano::nn
