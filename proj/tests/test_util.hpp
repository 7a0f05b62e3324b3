#pragma once

#include <vector>

#include "seq3/rng.hpp"
#include "seq3/tensor.hpp"

namespace seq3::testing {

inline std::vector<double> random_values(Rng& rng, std::size_t n, double lo = -1.0, double hi = 1.0) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(lo, hi);
  return v;
}

inline ad::Tensor random_param(Rng& rng, ad::Shape shape, double lo = -1.0, double hi = 1.0) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return ad::Tensor::parameter(random_values(rng, n, lo, hi), std::move(shape));
}

inline ad::Tensor random_const(Rng& rng, ad::Shape shape, double lo = -1.0, double hi = 1.0) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return ad::Tensor::constant(random_values(rng, n, lo, hi), std::move(shape));
}

}  // namespace seq3::testing
