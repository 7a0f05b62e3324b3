#include "seq3/params.hpp"

#include <cmath>

#include "seq3/errors.hpp"

namespace seq3 {

ad::Tensor ParameterStore::add(const std::string& name, ad::Tensor tensor) {
  if (!tensor.trainable()) throw ContractError("parameter '" + name + "' is not trainable");
  if (!index_.emplace(name, items_.size()).second) throw ContractError("duplicate parameter '" + name + "'");
  items_.emplace_back(name, tensor);
  return tensor;
}

const ad::Tensor& ParameterStore::get(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw IndexError("unknown parameter '" + name + "'");
  return items_[it->second].second;
}

std::size_t ParameterStore::element_count() const {
  std::size_t n = 0;
  for (const auto& [name, t] : items_) n += t.size();
  return n;
}

void ParameterStore::zero_grad() {
  for (auto& [name, t] : items_) {
    ad::Tensor h = t;
    h.zero_grad();
  }
}

void ParameterStore::clear_grad() {
  for (auto& [name, t] : items_) {
    ad::Tensor h = t;
    h.clear_grad();
  }
}

void ParameterStore::set_frozen(bool frozen) {
  for (auto& [name, t] : items_) {
    ad::Tensor h = t;
    h.set_requires_grad(!frozen);
  }
}

double Adam::step(ParameterStore& params) {
  double sq = 0.0;
  for (const auto& [name, t] : params.items())
    if (t.has_grad())
      for (double g : t.grad()) sq += g * g;
  const double norm = std::sqrt(sq);
  const double clip = (config_.clip_norm > 0.0 && norm > config_.clip_norm) ? config_.clip_norm / norm : 1.0;

  ++steps_;
  const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(steps_));
  const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(steps_));
  for (const auto& [name, tensor] : params.items()) {
    if (!tensor.has_grad()) continue;
    ad::Tensor t = tensor;
    auto& [m, v] = moments_[name];
    if (m.size() != t.size()) {
      m.assign(t.size(), 0.0);
      v.assign(t.size(), 0.0);
    }
    auto values = t.mutable_values();
    auto grad = t.grad();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double g = grad[i] * clip;
      m[i] = config_.beta1 * m[i] + (1.0 - config_.beta1) * g;
      v[i] = config_.beta2 * v[i] + (1.0 - config_.beta2) * g * g;
      values[i] -= config_.lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + config_.eps);
    }
  }
  return norm;
}

}  // namespace seq3
