#include "duriano/nn/params.hpp"

#include <algorithm>
#include <cmath>

#include "duriano/util/error.hpp"

namespace duriano::nn {

void ParamStore::claim(const std::string& name) {
  if (std::find(names_.begin(), names_.end(), name) != names_.end())
    throw ConfigError("duplicate parameter name '" + name + "'");
  names_.push_back(name);
}

Var ParamStore::create(const std::string& name, Tensor init) {
  claim(name);
  Var v(std::move(init), true);
  params_.push_back({name, v});
  return v;
}

std::shared_ptr<Tensor> ParamStore::create_buffer(const std::string& name, Tensor init) {
  claim(name);
  auto t = std::make_shared<Tensor>(std::move(init));
  buffers_.push_back({name, t});
  return t;
}

const Parameter* ParamStore::find(const std::string& name) const {
  for (const auto& p : params_)
    if (p.name == name) return &p;
  return nullptr;
}

void ParamStore::zero_grad() {
  for (auto& p : params_) p.var.zero_grad();
}

std::size_t ParamStore::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.var.value().size();
  return n;
}

void ParamStore::round_to_float() {
  for (auto& p : params_) nn::round_to_float(p.var.value());
  for (auto& b : buffers_) nn::round_to_float(*b.tensor);
}

bool ParamStore::all_finite() const {
  return std::all_of(params_.begin(), params_.end(), [](const Parameter& p) { return p.var.value().all_finite(); }) &&
         std::all_of(buffers_.begin(), buffers_.end(), [](const Buffer& b) { return b.tensor->all_finite(); });
}

Tensor uniform_fan_in(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  Tensor t(fan_in, fan_out);
  const double bound = 1.0 / std::sqrt(static_cast<double>(std::max<std::size_t>(fan_in, 1)));
  for (auto& v : t.values()) v = rng.uniform(-bound, bound);
  return t;
}

Tensor normal_table(std::size_t rows, std::size_t cols, double stddev, Rng& rng) {
  Tensor t(rows, cols);
  for (auto& v : t.values()) v = rng.normal(0.0, stddev);
  return t;
}

}  // namespace duriano::nn
