#pragma once
// The four training losses and their weighted combination.

#include <string>
#include <vector>

#include "seq3/keyvalue.hpp"
#include "seq3/tensor.hpp"
#include "seq3/vocab.hpp"

namespace seq3 {

struct LossWeights {
  double reconstruction = 1.0;  // lambda_R
  double prior = 0.1;           // lambda_P
  double topic = 1.0;           // lambda_T
  double length = 0.1;          // lambda_L

  void validate() const;
  void bind(ConfigBinder& binder, const std::string& prefix);
};

struct LossBundle {
  ad::Tensor reconstruction;
  ad::Tensor prior;
  ad::Tensor topic;
  ad::Tensor length;
  ad::Tensor total;
};

// -sum_i log p(x_i), one logit vector per target token.
ad::Tensor reconstruction_loss(const std::vector<ad::Tensor>& logits, const std::vector<TokenId>& targets);

// sum_t KL(p_C(. | t) || p_LM(. | t)); the LM log-distributions are treated
// as constants.
ad::Tensor lm_prior_loss(const std::vector<ad::Tensor>& compressor_logits, const std::vector<ad::Tensor>& lm_logs);

struct TopicLossResult {
  ad::Tensor loss;
  bool unweighted_fallback = false;  // idf mass of x was zero
  bool degenerate = false;           // a centroid had zero norm; loss is 1 with no gradient
};

// 1 - cos(v_x, v_y) with v_x the idf-weighted mean of the source embeddings
// and v_y the plain mean of the summary embeddings.
TopicLossResult topic_loss(const std::vector<ad::Tensor>& source_embeddings, const std::vector<double>& source_idf,
                           const std::vector<ad::Tensor>& summary_embeddings);

// sum over the extra steps of -log p(EOS).
ad::Tensor length_penalty(const std::vector<ad::Tensor>& extra_logits, TokenId eos = kEos);

LossBundle total_loss(ad::Tensor reconstruction, ad::Tensor prior, ad::Tensor topic, ad::Tensor length,
                      const LossWeights& weights);

}  // namespace seq3
