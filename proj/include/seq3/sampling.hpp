#pragma once

#include <optional>
#include <string>
#include <vector>

#include "seq3/rng.hpp"
#include "seq3/tensor.hpp"
#include "seq3/vocab.hpp"

namespace seq3 {

enum class SamplingMode {
  SoftArgmax,      // deterministic relaxed mixture
  GumbelRelaxed,   // relaxed mixture of noised logits (forward and backward)
  GumbelST,        // exact row forward, relaxed gradient backward
  Greedy,          // argmax row, inference only
};

std::string to_string(SamplingMode mode);
SamplingMode parse_sampling_mode(const std::string& text);

struct SamplingConfig {
  SamplingMode mode = SamplingMode::GumbelST;
  double tau = 0.5;
  bool learned_tau = false;
  double tau0 = 1.0;
  double alpha = 0.4;
  double beta = 0.6;
  std::size_t min_length = 5;

  void validate() const;
};

// Result of emitting one summary word.
struct SampledWord {
  TokenId id = 0;
  ad::Tensor embedding;         // what the next consumer sees
  ad::Tensor weights;           // relaxed mixture weights (undefined for greedy)
  std::vector<double> noise;    // Gumbel noise used (empty if none)
};

// sum_i E_i softmax(u / tau)_i
ad::Tensor soft_argmax_embedding(const ad::Tensor& logits, double tau, const ad::Tensor& embeddings);

// -log(-log x) with x clamped to (1e-10, 1 - 1e-10).
double gumbel_from_uniform(double x);
std::vector<double> gumbel_noise(std::size_t n, Rng& rng);

// Relaxed mixture of softmax((u + noise) / tau); draws the noise unless `noise` is given.
SampledWord gumbel_softmax_embedding(const ad::Tensor& logits, double tau, const ad::Tensor& embeddings, Rng& rng);
SampledWord gumbel_softmax_embedding(const ad::Tensor& logits, double tau, const ad::Tensor& embeddings,
                                     std::vector<double> noise);

// Forward: the exact row E[argmax(u + noise)]. Backward: the gradient of the
// relaxed mixture under the same noise.
SampledWord straight_through_embedding(const ad::Tensor& logits, double tau, const ad::Tensor& embeddings, Rng& rng);
SampledWord straight_through_embedding(const ad::Tensor& logits, double tau, const ad::Tensor& embeddings,
                                       std::vector<double> noise);

// Learned-temperature variants: tau is a one-element tensor.
SampledWord gumbel_softmax_embedding(const ad::Tensor& logits, const ad::Tensor& tau, const ad::Tensor& embeddings,
                                     std::vector<double> noise);
SampledWord straight_through_embedding(const ad::Tensor& logits, const ad::Tensor& tau, const ad::Tensor& embeddings,
                                       std::vector<double> noise);

// E[argmax(u)] with no relaxation.
SampledWord greedy_embedding(const ad::Tensor& logits, const ad::Tensor& embeddings);

std::size_t argmax(std::span<const double> values);

// round(U(alpha N, beta N)) half-up, raised to min_length.
std::size_t sample_target_length(std::size_t source_length, double alpha, double beta, Rng& rng,
                                 std::size_t min_length = 5);
// round(ratio N) half-up, raised to min_length.
std::size_t inference_target_length(std::size_t source_length, double ratio = 0.5, std::size_t min_length = 5);

// 1 / (softplus(w_tau . h) + tau0), in (0, 1 / tau0).
ad::Tensor learned_temperature(const ad::Tensor& hidden, const ad::Tensor& w_tau, double tau0);

}  // namespace seq3
