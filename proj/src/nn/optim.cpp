#include "duriano/nn/optim.hpp"

#include <cmath>
#include <sstream>

#include "duriano/util/error.hpp"

namespace duriano::nn {

double gradient_norm(const ParamStore& store) {
  double total = 0.0;
  for (const auto& p : store.parameters()) {
    if (!p.var.has_grad()) continue;
    for (double g : p.var.grad().values()) total += g * g;
  }
  return std::sqrt(total);
}

Adam::Adam(const AdamConfig& cfg, const ParamStore& store) : cfg_(cfg) {
  if (cfg.learning_rate < 0.0) throw ConfigError("invalid config: learning_rate must be >= 0");
  if (cfg.decay_steps <= 0.0) throw ConfigError("invalid config: lr_decay_steps must be > 0");
  for (const auto& p : store.parameters()) {
    names_.push_back(p.name);
    m_.emplace_back(p.var.rows(), p.var.cols());
    v_.emplace_back(p.var.rows(), p.var.cols());
  }
}

double Adam::learning_rate_at(std::uint64_t step) const {
  return cfg_.learning_rate * std::pow(cfg_.decay_rate, static_cast<double>(step) / cfg_.decay_steps);
}

UpdateReport Adam::step(ParamStore& store) {
  const auto& params = store.parameters();
  if (params.size() != names_.size()) throw NumericError("optimizer state does not match the parameter set");

  std::ostringstream bad;
  for (const auto& p : params)
    if (p.var.has_grad() && !p.var.grad().all_finite()) bad << ' ' << p.name;
  UpdateReport report;
  report.grad_norm = gradient_norm(store);
  if (!bad.str().empty() || !std::isfinite(report.grad_norm))
    throw NumericError("non-finite gradient in" + bad.str() + " (grad norm " + std::to_string(report.grad_norm) + ")");

  double scale = 1.0;
  if (cfg_.clip_norm > 0.0 && report.grad_norm > cfg_.clip_norm) {
    scale = cfg_.clip_norm / report.grad_norm;
    report.clipped = true;
  }
  report.learning_rate = learning_rate_at(steps_);
  ++steps_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(steps_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(steps_));

  for (std::size_t i = 0; i < params.size(); ++i) {
    Var var = params[i].var;
    if (!var.has_grad()) continue;
    Tensor& value = var.value();
    const Tensor& grad = var.grad();
    Tensor& m = m_[i];
    Tensor& v = v_[i];
    for (std::size_t k = 0; k < value.size(); ++k) {
      const double g = grad[k] * scale;
      m[k] = cfg_.beta1 * m[k] + (1.0 - cfg_.beta1) * g;
      v[k] = cfg_.beta2 * v[k] + (1.0 - cfg_.beta2) * g * g;
      const double mhat = m[k] / bc1;
      const double vhat = v[k] / bc2;
      value[k] -= report.learning_rate * mhat / (std::sqrt(vhat) + cfg_.epsilon);
    }
    round_to_float(m);
    round_to_float(v);
  }
  store.round_to_float();
  if (!store.all_finite()) {
    std::ostringstream names;
    for (const auto& p : params)
      if (!p.var.value().all_finite()) names << ' ' << p.name;
    throw NumericError("update produced non-finite values in" + names.str());
  }
  return report;
}

void Adam::export_state(TensorArchive& archive) const {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    archive.tensors.push_back({"adam.m/" + names_[i], m_[i]});
    archive.tensors.push_back({"adam.v/" + names_[i], v_[i]});
  }
}

void Adam::import_state(const TensorArchive& archive, const ParamStore& store, std::uint64_t steps) {
  names_.clear();
  m_.clear();
  v_.clear();
  for (const auto& p : store.parameters()) {
    names_.push_back(p.name);
    const Tensor& m = archive.at("adam.m/" + p.name);
    const Tensor& v = archive.at("adam.v/" + p.name);
    if (!m.same_shape(p.var.value()) || !v.same_shape(p.var.value()))
      throw InputError("checkpoint optimizer state shape mismatch for " + p.name);
    m_.push_back(m);
    v_.push_back(v);
  }
  steps_ = steps;
}

}  // namespace duriano::nn
