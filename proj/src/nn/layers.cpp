#include "duriano/nn/layers.hpp"

#include <cmath>

#include "duriano/util/error.hpp"

namespace duriano::nn {

Var activate(const Var& x, Activation act) {
  switch (act) {
    case Activation::identity: return x;
    case Activation::relu: return relu(x);
    case Activation::tanh: return tanh(x);
    case Activation::sigmoid: return sigmoid(x);
  }
  return x;
}

Linear::Linear(ParamStore& store, const std::string& name, std::size_t in, std::size_t out, Activation act, Rng& rng)
    : weight_(store.create(name + ".weight", uniform_fan_in(in, out, rng))),
      bias_(store.create(name + ".bias", Tensor(1, out))),
      act_(act) {}

Var Linear::operator()(const Var& x) const {
  if (x.cols() != weight_.rows())
    throw InputError("fully_connected: input width " + std::to_string(x.cols()) + " != " + std::to_string(weight_.rows()));
  return activate(add(matmul(x, weight_), bias_), act_);
}

Embedding::Embedding(ParamStore& store, const std::string& name, std::size_t vocab, std::size_t dim, Rng& rng)
    : table_(store.create(name + ".table", normal_table(vocab, dim, 0.01, rng))) {}

Conv1d::Conv1d(ParamStore& store, const std::string& name, std::size_t in, std::size_t out, std::size_t kernel,
               Rng& rng)
    : weight_(store.create(name + ".weight", uniform_fan_in(kernel * in, out, rng))),
      bias_(store.create(name + ".bias", Tensor(1, out))),
      kernel_(kernel) {}

Var Conv1d::operator()(const Var& x) const {
  if (x.cols() * kernel_ != weight_.rows()) throw InputError("conv1d: channel mismatch for " + x.value().shape_string());
  return add(matmul(unfold_same(x, kernel_), weight_), bias_);
}

BatchNorm::BatchNorm(ParamStore& store, const std::string& name, std::size_t channels)
    : gamma_(store.create(name + ".gamma", Tensor(1, channels, 1.0))),
      beta_(store.create(name + ".beta", Tensor(1, channels))),
      mean_(store.create_buffer(name + ".running_mean", Tensor(1, channels))),
      var_(store.create_buffer(name + ".running_var", Tensor(1, channels, 1.0))) {}

Var BatchNorm::operator()(const Var& x, const ForwardContext& ctx) const {
  if (!ctx.training) return batch_norm_fixed(x, gamma_, beta_, *mean_, *var_, kEps);
  const std::size_t rows = x.rows(), cols = x.cols();
  for (std::size_t c = 0; c < cols; ++c) {
    double m = 0.0, v = 0.0;
    for (std::size_t t = 0; t < rows; ++t) m += x.value()(t, c);
    m /= static_cast<double>(rows);
    for (std::size_t t = 0; t < rows; ++t) v += (x.value()(t, c) - m) * (x.value()(t, c) - m);
    v /= static_cast<double>(rows);
    (*mean_)[c] = (1.0 - ctx.bn_momentum) * (*mean_)[c] + ctx.bn_momentum * m;
    (*var_)[c] = (1.0 - ctx.bn_momentum) * (*var_)[c] + ctx.bn_momentum * v;
  }
  return batch_norm_train(x, gamma_, beta_, kEps);
}

Highway::Highway(ParamStore& store, const std::string& name, std::size_t dim, Rng& rng)
    : transform_(store, name + ".H", dim, dim, Activation::relu, rng),
      gate_(store, name + ".T", dim, dim, Activation::sigmoid, rng) {}

Var Highway::operator()(const Var& x) const {
  const Var t = gate_(x);
  const Var h = transform_(x);
  return add(mul(t, h), mul(affine(t, -1.0, 1.0), x));
}

namespace {

double logistic(double x) { return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); }

// Fused GRU step: inputs projected row gx [1, 3H], h [1, H], Wh [H, 3H],
// bh [1, 3H].
Var gru_step_op(const Var& gx, const Var& h, const Var& w_h, const Var& b_h) {
  const std::size_t hid = h.cols();
  if (gx.rows() != 1 || h.rows() != 1 || gx.cols() != 3 * hid) throw InputError("gru_cell: shape mismatch");
  Tensor gh(1, 3 * hid);
  for (std::size_t j = 0; j < 3 * hid; ++j) gh[j] = b_h.value()[j];
  for (std::size_t i = 0; i < hid; ++i) {
    const double hv = h.value()[i];
    if (hv == 0.0) continue;
    const auto wrow = w_h.value().row(i);
    for (std::size_t j = 0; j < 3 * hid; ++j) gh[j] += hv * wrow[j];
  }
  Tensor r(1, hid), z(1, hid), n(1, hid), out(1, hid);
  for (std::size_t k = 0; k < hid; ++k) {
    r[k] = logistic(gx.value()[k] + gh[k]);
    z[k] = logistic(gx.value()[hid + k] + gh[hid + k]);
    n[k] = std::tanh(gx.value()[2 * hid + k] + r[k] * gh[2 * hid + k]);
    out[k] = (1.0 - z[k]) * n[k] + z[k] * h.value()[k];
  }
  return record(std::move(out), {gx, h, w_h, b_h},
                [gh = std::move(gh), r = std::move(r), z = std::move(z), n = std::move(n), hid](Node& self) {
                  const Tensor& hprev = self.inputs[1]->value;
                  Tensor dgh(1, 3 * hid), dgx(1, 3 * hid), dh(1, hid);
                  for (std::size_t k = 0; k < hid; ++k) {
                    const double g = self.grad[k];
                    const double dz = g * (hprev[k] - n[k]);
                    const double dn = g * (1.0 - z[k]);
                    dh[k] = g * z[k];
                    const double da_n = dn * (1.0 - n[k] * n[k]);
                    const double dr = da_n * gh[2 * hid + k];
                    const double da_z = dz * z[k] * (1.0 - z[k]);
                    const double da_r = dr * r[k] * (1.0 - r[k]);
                    dgx[k] = da_r;
                    dgx[hid + k] = da_z;
                    dgx[2 * hid + k] = da_n;
                    dgh[k] = da_r;
                    dgh[hid + k] = da_z;
                    dgh[2 * hid + k] = da_n * r[k];
                  }
                  const Tensor& wh = self.inputs[2]->value;
                  for (std::size_t i = 0; i < hid; ++i) {
                    const auto wrow = wh.row(i);
                    double acc = 0.0;
                    for (std::size_t j = 0; j < 3 * hid; ++j) acc += dgh[j] * wrow[j];
                    dh[i] += acc;
                  }
                  if (self.inputs[0]->requires_grad) {
                    Tensor& g = self.inputs[0]->grad_buffer();
                    for (std::size_t j = 0; j < 3 * hid; ++j) g[j] += dgx[j];
                  }
                  if (self.inputs[1]->requires_grad) {
                    Tensor& g = self.inputs[1]->grad_buffer();
                    for (std::size_t k = 0; k < hid; ++k) g[k] += dh[k];
                  }
                  if (self.inputs[2]->requires_grad) {
                    Tensor& g = self.inputs[2]->grad_buffer();
                    for (std::size_t i = 0; i < hid; ++i) {
                      const double hv = hprev[i];
                      if (hv == 0.0) continue;
                      auto grow = g.row(i);
                      for (std::size_t j = 0; j < 3 * hid; ++j) grow[j] += hv * dgh[j];
                    }
                  }
                  if (self.inputs[3]->requires_grad) {
                    Tensor& g = self.inputs[3]->grad_buffer();
                    for (std::size_t j = 0; j < 3 * hid; ++j) g[j] += dgh[j];
                  }
                });
}

}  // namespace

Gru::Gru(ParamStore& store, const std::string& name, std::size_t in, std::size_t hidden, Rng& rng) {
  // Fan-in scaling by the hidden size for both weight blocks.
  const double bound = 1.0 / std::sqrt(static_cast<double>(hidden));
  auto init = [&](std::size_t rows) {
    Tensor t(rows, 3 * hidden);
    for (auto& v : t.values()) v = rng.uniform(-bound, bound);
    return t;
  };
  w_x_ = store.create(name + ".w_x", init(in));
  w_h_ = store.create(name + ".w_h", init(hidden));
  b_x_ = store.create(name + ".b_x", Tensor(1, 3 * hidden));
  b_h_ = store.create(name + ".b_h", Tensor(1, 3 * hidden));
}

Var Gru::input_projection(const Var& x) const {
  if (x.cols() != w_x_.rows()) throw InputError("gru: input width " + std::to_string(x.cols()) + " != " + std::to_string(w_x_.rows()));
  return add(matmul(x, w_x_), b_x_);
}

Var Gru::step(const Var& projected_row, const Var& h_prev) const { return gru_step_op(projected_row, h_prev, w_h_, b_h_); }

Var Gru::cell(const Var& x_row, const Var& h_prev) const { return step(input_projection(x_row), h_prev); }

Var Gru::zero_state() const { return constant(Tensor(1, hidden())); }

Var Gru::run(const Var& x) const {
  const Var projected = input_projection(x);
  Var h = zero_state();
  std::vector<Var> states;
  states.reserve(x.rows());
  for (std::size_t t = 0; t < x.rows(); ++t) {
    h = step(slice_rows(projected, t, 1), h);
    states.push_back(h);
  }
  return concat_rows(states);
}

BiGru::BiGru(ParamStore& store, const std::string& name, std::size_t in, std::size_t hidden, Rng& rng)
    : forward_(store, name + ".fw", in, hidden, rng), backward_(store, name + ".bw", in, hidden, rng) {}

Var BiGru::operator()(const Var& x) const {
  if (x.rows() == 0) throw InputError("bidirectional_gru: empty sequence");
  return concat_cols({forward_.run(x), reverse_rows(backward_.run(reverse_rows(x)))});
}

Cbhg::Cbhg(ParamStore& store, const std::string& name, std::size_t input_dim, const CbhgConfig& cfg, Rng& rng)
    : cfg_(cfg), input_dim_(input_dim) {
  if (cfg.bank_k < 1) throw ConfigError("cbhg: bank K must be >= 1");
  if (cfg.projections.empty() || cfg.projections.back() != input_dim)
    throw ConfigError("cbhg: last projection width must equal the input width (" + std::to_string(input_dim) +
                      ") for the residual connection");
  for (std::size_t k = 1; k <= cfg.bank_k; ++k) {
    bank_.emplace_back(store, name + ".bank" + std::to_string(k), input_dim, cfg.bank_channels, k, rng);
    bank_bn_.emplace_back(store, name + ".bank" + std::to_string(k) + ".bn", cfg.bank_channels);
  }
  std::size_t width = cfg.bank_k * cfg.bank_channels;
  for (std::size_t i = 0; i < cfg.projections.size(); ++i) {
    proj_.emplace_back(store, name + ".proj" + std::to_string(i), width, cfg.projections[i], 3, rng);
    proj_bn_.emplace_back(store, name + ".proj" + std::to_string(i) + ".bn", cfg.projections[i]);
    width = cfg.projections[i];
  }
  if (cfg.highway_dim != input_dim)
    pre_highway_.emplace(store, name + ".pre_highway", input_dim, cfg.highway_dim, Activation::identity, rng);
  for (std::size_t i = 0; i < cfg.highway_layers; ++i)
    highway_.emplace_back(store, name + ".highway" + std::to_string(i), cfg.highway_dim, rng);
  gru_ = BiGru(store, name + ".gru", cfg.highway_dim, cfg.gru_units, rng);
}

Var Cbhg::bank(const Var& x, const ForwardContext& ctx) const {
  if (x.rows() == 0) throw InputError("cbhg: empty sequence");
  std::vector<Var> outs;
  outs.reserve(bank_.size());
  for (std::size_t k = 0; k < bank_.size(); ++k) outs.push_back(relu(bank_bn_[k](bank_[k](x), ctx)));
  return concat_cols(outs);
}

Var Cbhg::operator()(const Var& x, const ForwardContext& ctx) const {
  if (x.cols() != input_dim_)
    throw InputError("cbhg: input width " + std::to_string(x.cols()) + " != " + std::to_string(input_dim_));
  Var y = max_pool_pairs(bank(x, ctx));
  for (std::size_t i = 0; i < proj_.size(); ++i) {
    y = proj_bn_[i](proj_[i](y), ctx);
    if (i + 1 < proj_.size()) y = relu(y);
  }
  y = add(y, x);
  if (pre_highway_) y = (*pre_highway_)(y);
  for (const auto& hw : highway_) y = hw(y);
  return gru_(y);
}

Tensor dropout_mask(std::uint64_t seed, std::size_t layer, std::size_t row_offset, std::size_t rows, std::size_t cols,
                    double p) {
  Tensor mask(rows, cols);
  const double keep = 1.0 / (1.0 - p);
  for (std::size_t r = 0; r < rows; ++r) {
    Rng rng(Rng::mix(Rng::mix(seed, layer), row_offset + r));
    for (std::size_t c = 0; c < cols; ++c) mask(r, c) = rng.uniform() < p ? 0.0 : keep;
  }
  return mask;
}

Prenet::Prenet(ParamStore& store, const std::string& name, std::size_t in, const std::vector<std::size_t>& dims,
               double dropout, Rng& rng, std::size_t stream)
    : dropout_(dropout), stream_(stream) {
  if (dropout < 0.0 || dropout >= 1.0) throw ConfigError("prenet: dropout must lie in [0, 1)");
  std::size_t width = in;
  for (std::size_t i = 0; i < dims.size(); ++i) {
    layers_.emplace_back(store, name + ".fc" + std::to_string(i), width, dims[i], Activation::relu, rng);
    width = dims[i];
  }
}

Var Prenet::operator()(const Var& x, const ForwardContext& ctx, std::size_t row_offset) const {
  Var y = x;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    y = layers_[i](y);
    if (ctx.dropout_seed && dropout_ > 0.0)
      y = mul(y, constant(dropout_mask(*ctx.dropout_seed, stream_ * 64 + i, row_offset, y.rows(), y.cols(), dropout_)));
  }
  return y;
}

}  // namespace duriano::nn
