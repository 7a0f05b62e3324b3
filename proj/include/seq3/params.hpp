#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "seq3/tensor.hpp"

namespace seq3 {

// Named trainable tensors in registration order. Registration order is the
// canonical order used by checkpoints and the optimizer.
class ParameterStore {
 public:
  ad::Tensor add(const std::string& name, ad::Tensor tensor);
  const ad::Tensor& get(const std::string& name) const;
  bool contains(const std::string& name) const { return index_.count(name) != 0; }

  const std::vector<std::pair<std::string, ad::Tensor>>& items() const { return items_; }
  std::size_t element_count() const;
  void zero_grad();
  void clear_grad();
  // Turns gradient recording for every parameter off (frozen) or back on.
  void set_frozen(bool frozen);

 private:
  std::vector<std::pair<std::string, ad::Tensor>> items_;
  std::map<std::string, std::size_t> index_;
};

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double clip_norm = 0.0;  // global gradient-norm clip; 0 disables
};

class Adam {
 public:
  explicit Adam(AdamConfig config = {}) : config_(config) {}

  // One update from the accumulated gradients; parameters without a
  // gradient are left untouched. Returns the pre-clip global gradient norm.
  double step(ParameterStore& params);

  AdamConfig& config() { return config_; }
  const AdamConfig& config() const { return config_; }
  std::uint64_t steps() const { return steps_; }

  // Moments by parameter name, for checkpointing.
  const std::map<std::string, std::pair<std::vector<double>, std::vector<double>>>& moments() const {
    return moments_;
  }
  void restore(std::uint64_t steps, std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> moments) {
    steps_ = steps;
    moments_ = std::move(moments);
  }

 private:
  AdamConfig config_;
  std::uint64_t steps_ = 0;
  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> moments_;
};

}  // namespace seq3
