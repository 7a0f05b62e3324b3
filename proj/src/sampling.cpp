#include "seq3/sampling.hpp"

#include <algorithm>
#include <cmath>

#include "seq3/errors.hpp"

namespace seq3 {

using ad::Tensor;

std::string to_string(SamplingMode mode) {
  switch (mode) {
    case SamplingMode::SoftArgmax: return "soft-argmax";
    case SamplingMode::GumbelRelaxed: return "gumbel-relaxed";
    case SamplingMode::GumbelST: return "gumbel-st";
    case SamplingMode::Greedy: return "greedy";
  }
  return "?";
}

SamplingMode parse_sampling_mode(const std::string& text) {
  for (auto m : {SamplingMode::SoftArgmax, SamplingMode::GumbelRelaxed, SamplingMode::GumbelST, SamplingMode::Greedy})
    if (to_string(m) == text) return m;
  throw InputError("unknown sampling mode '" + text + "'");
}

void SamplingConfig::validate() const {
  if (!(tau > 0.0)) throw InputError("sampling: tau must be positive");
  if (learned_tau && !(tau0 > 0.0)) throw InputError("sampling: tau0 must be positive");
  if (!(alpha > 0.0 && alpha <= beta && beta <= 1.0))
    throw InputError("sampling: need 0 < alpha <= beta <= 1");
  if (min_length == 0) throw InputError("sampling: minimum length must be positive");
}

namespace {

void require_positive_tau(double tau) {
  if (!(tau > 0.0)) throw InputError("sampling: temperature must be positive, got " + std::to_string(tau));
}

Tensor noised(const Tensor& logits, const std::vector<double>& noise) {
  if (noise.size() != logits.size())
    throw DimensionError("sampling: " + std::to_string(noise.size()) + " noise values for " +
                         std::to_string(logits.size()) + " logits");
  return ad::add(logits, Tensor::constant(noise));
}

SampledWord relaxed(const Tensor& logits, const Tensor& weights, const Tensor& embeddings,
                    std::vector<double> noise) {
  SampledWord out;
  out.weights = weights;
  out.embedding = ad::matvec_t(embeddings, weights);
  out.noise = std::move(noise);
  std::vector<double> perturbed(logits.values().begin(), logits.values().end());
  for (std::size_t i = 0; i < out.noise.size(); ++i) perturbed[i] += out.noise[i];
  out.id = argmax(perturbed);
  return out;
}

// Copy of one embedding row, outside the graph.
Tensor row_constant(const Tensor& embeddings, TokenId id) {
  const std::size_t d = embeddings.dim(1);
  auto v = embeddings.values().subspan(id * d, d);
  return Tensor::constant(std::vector<double>(v.begin(), v.end()));
}

SampledWord to_straight_through(SampledWord word, const Tensor& embeddings) {
  Tensor hard = row_constant(embeddings, word.id);
  word.embedding = ad::straight_through(hard, word.embedding);
  return word;
}

}  // namespace

std::size_t argmax(std::span<const double> values) {
  return static_cast<std::size_t>(std::max_element(values.begin(), values.end()) - values.begin());
}

Tensor soft_argmax_embedding(const Tensor& logits, double tau, const Tensor& embeddings) {
  require_positive_tau(tau);
  return ad::matvec_t(embeddings, ad::softmax(logits, tau));
}

double gumbel_from_uniform(double x) {
  constexpr double lo = 1e-10, hi = 1.0 - 1e-10;
  x = std::clamp(x, lo, hi);
  return -std::log(-std::log(x));
}

std::vector<double> gumbel_noise(std::size_t n, Rng& rng) {
  std::vector<double> out(n);
  for (double& v : out) v = gumbel_from_uniform(rng.uniform());
  return out;
}

SampledWord gumbel_softmax_embedding(const Tensor& logits, double tau, const Tensor& embeddings, Rng& rng) {
  require_positive_tau(tau);
  return gumbel_softmax_embedding(logits, tau, embeddings, gumbel_noise(logits.size(), rng));
}

SampledWord gumbel_softmax_embedding(const Tensor& logits, double tau, const Tensor& embeddings,
                                     std::vector<double> noise) {
  require_positive_tau(tau);
  Tensor weights = ad::softmax(noised(logits, noise), tau);
  return relaxed(logits, weights, embeddings, std::move(noise));
}

SampledWord gumbel_softmax_embedding(const Tensor& logits, const Tensor& tau, const Tensor& embeddings,
                                     std::vector<double> noise) {
  if (tau.size() != 1 || !(tau[0] > 0.0)) throw InputError("sampling: temperature must be a positive scalar");
  Tensor weights = ad::softmax(ad::mul_scalar(noised(logits, noise), ad::reciprocal(tau)));
  return relaxed(logits, weights, embeddings, std::move(noise));
}

SampledWord straight_through_embedding(const Tensor& logits, double tau, const Tensor& embeddings, Rng& rng) {
  return to_straight_through(gumbel_softmax_embedding(logits, tau, embeddings, rng), embeddings);
}

SampledWord straight_through_embedding(const Tensor& logits, double tau, const Tensor& embeddings,
                                       std::vector<double> noise) {
  return to_straight_through(gumbel_softmax_embedding(logits, tau, embeddings, std::move(noise)), embeddings);
}

SampledWord straight_through_embedding(const Tensor& logits, const Tensor& tau, const Tensor& embeddings,
                                       std::vector<double> noise) {
  return to_straight_through(gumbel_softmax_embedding(logits, tau, embeddings, std::move(noise)), embeddings);
}

SampledWord greedy_embedding(const Tensor& logits, const Tensor& embeddings) {
  SampledWord out;
  out.id = argmax(logits.values());
  out.embedding = row_constant(embeddings, out.id);
  return out;
}

std::size_t sample_target_length(std::size_t source_length, double alpha, double beta, Rng& rng,
                                 std::size_t min_length) {
  if (source_length == 0) throw InputError("sample_target_length: empty source");
  const double n = static_cast<double>(source_length);
  const double u = rng.uniform(alpha * n, beta * n);
  const auto m = static_cast<std::size_t>(std::floor(u + 0.5));
  return std::max(m, min_length);
}

std::size_t inference_target_length(std::size_t source_length, double ratio, std::size_t min_length) {
  if (source_length == 0) throw InputError("inference_target_length: empty source");
  if (!(ratio > 0.0)) throw InputError("compression ratio must be positive");
  const auto m = static_cast<std::size_t>(std::floor(ratio * static_cast<double>(source_length) + 0.5));
  return std::max(m, min_length);
}

Tensor learned_temperature(const Tensor& hidden, const Tensor& w_tau, double tau0) {
  if (!(tau0 > 0.0)) throw InputError("learned_temperature: tau0 must be positive");
  return ad::reciprocal(ad::add(ad::softplus(ad::dot(w_tau, hidden)), Tensor::scalar(tau0)));
}

}  // namespace seq3
