#include "seq3/losses.hpp"

#include "seq3/errors.hpp"

namespace seq3 {

using ad::Tensor;

void LossWeights::validate() const {
  for (double w : {reconstruction, prior, topic, length})
    if (!(w >= 0.0)) throw InputError("loss weights must be non-negative");
}

void LossWeights::bind(ConfigBinder& b, const std::string& p) {
  b.bind(p + "lambda_r", reconstruction);
  b.bind(p + "lambda_p", prior);
  b.bind(p + "lambda_t", topic);
  b.bind(p + "lambda_l", length);
}

Tensor reconstruction_loss(const std::vector<Tensor>& logits, const std::vector<TokenId>& targets) {
  if (logits.size() != targets.size())
    throw DimensionError("reconstruction_loss: " + std::to_string(logits.size()) + " logit vectors for " +
                         std::to_string(targets.size()) + " targets");
  if (logits.empty()) throw InputError("reconstruction_loss: empty sequence");
  std::vector<Tensor> terms;
  terms.reserve(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) terms.push_back(ad::cross_entropy_from_logits(logits[i], targets[i]));
  return ad::sum(ad::concat(terms));
}

Tensor lm_prior_loss(const std::vector<Tensor>& compressor_logits, const std::vector<Tensor>& lm_logs) {
  if (compressor_logits.size() != lm_logs.size())
    throw DimensionError("lm_prior_loss: " + std::to_string(compressor_logits.size()) + " compressor steps, " +
                         std::to_string(lm_logs.size()) + " LM steps");
  if (compressor_logits.empty()) throw InputError("lm_prior_loss: no steps");
  std::vector<Tensor> terms;
  terms.reserve(lm_logs.size());
  for (std::size_t t = 0; t < lm_logs.size(); ++t)
    terms.push_back(ad::kl_divergence(ad::log_softmax(compressor_logits[t]), lm_logs[t].detach()));
  return ad::sum(ad::concat(terms));
}

TopicLossResult topic_loss(const std::vector<Tensor>& source, const std::vector<double>& idf,
                           const std::vector<Tensor>& summary) {
  if (source.empty() || summary.empty()) throw InputError("topic_loss: empty source or summary");
  if (idf.size() != source.size())
    throw DimensionError("topic_loss: " + std::to_string(idf.size()) + " idf weights for " +
                         std::to_string(source.size()) + " source tokens");
  TopicLossResult out;
  double mass = 0.0;
  for (double w : idf) {
    if (w < 0.0) throw InputError("topic_loss: negative idf weight");
    mass += w;
  }
  std::vector<Tensor> weighted;
  weighted.reserve(source.size());
  if (mass > 0.0) {
    for (std::size_t i = 0; i < source.size(); ++i)
      if (idf[i] > 0.0) weighted.push_back(ad::scale(source[i], idf[i] / mass));
  } else {
    out.unweighted_fallback = true;
    for (const auto& e : source) weighted.push_back(ad::scale(e, 1.0 / static_cast<double>(source.size())));
  }
  Tensor vx = ad::add_n(weighted);
  Tensor vy = ad::scale(ad::add_n(summary), 1.0 / static_cast<double>(summary.size()));

  auto zero_norm = [](const Tensor& v) {
    for (double x : v.values())
      if (x != 0.0) return false;
    return true;
  };
  if (zero_norm(vx) || zero_norm(vy)) {
    out.degenerate = true;
    out.loss = Tensor::scalar(1.0);
    return out;
  }
  out.loss = ad::sub(Tensor::scalar(1.0), ad::cosine_similarity(vx, vy));
  return out;
}

Tensor length_penalty(const std::vector<Tensor>& extra_logits, TokenId eos) {
  if (extra_logits.empty()) throw ContractError("length_penalty: needs at least one extra decoder step");
  std::vector<Tensor> terms;
  terms.reserve(extra_logits.size());
  for (const auto& u : extra_logits) terms.push_back(ad::cross_entropy_from_logits(u, eos));
  return ad::sum(ad::concat(terms));
}

LossBundle total_loss(Tensor reconstruction, Tensor prior, Tensor topic, Tensor length, const LossWeights& w) {
  w.validate();
  LossBundle b{std::move(reconstruction), std::move(prior), std::move(topic), std::move(length), {}};
  b.total = ad::add_n({ad::scale(b.reconstruction, w.reconstruction), ad::scale(b.prior, w.prior),
                       ad::scale(b.topic, w.topic), ad::scale(b.length, w.length)});
  return b;
}

}  // namespace seq3
