#pragma once
// The compressor / reconstructor autoencoder: a shared bidirectional
// encoder, two attentional decoders tied to one embedding matrix, and a
// discrete word sequence between them.

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "seq3/checkpoint.hpp"
#include "seq3/coders.hpp"
#include "seq3/keyvalue.hpp"
#include "seq3/lm.hpp"
#include "seq3/losses.hpp"
#include "seq3/params.hpp"
#include "seq3/sampling.hpp"
#include "seq3/vocab.hpp"

namespace seq3 {

struct Seq3Config {
  std::size_t embedding_dim = 100;
  std::size_t encoder_hidden = 300;  // per direction
  std::size_t encoder_layers = 2;
  std::size_t decoder_hidden = 300;
  std::size_t decoder_layers = 2;
  SamplingConfig sampling;
  double word_dropout = 0.5;
  LossWeights loss;
  double lr = 1e-3;
  std::size_t batch_size = 128;
  std::size_t epochs = 5;
  std::size_t extra_steps = 2;  // decoder steps past M for the length penalty
  double clip_norm = 0.0;       // 0 disables clipping
  double countdown_init = 1.0;
  double length_scale_init = 0.01;
  double inference_ratio = 0.5;
  bool check_bottleneck = false;  // verify every re-embedded word is an exact row

  static Seq3Config full_size() { return {}; }
  static Seq3Config desk();
  void validate() const;
  // Model and sampling fields under `prefix`, loss weights under `loss_prefix`.
  void bind(ConfigBinder& binder, const std::string& prefix, const std::string& loss_prefix);
  std::string to_text() const;
  static Seq3Config from_text(const std::string& text);
};

// Every random choice made by one training forward pass. Passing it back in
// replays the pass exactly.
struct Randomness {
  std::size_t target_length = 0;
  std::vector<std::vector<double>> noise;  // one vector per sampled step
  std::vector<TokenId> reconstructor_inputs;  // after word dropout
};

struct SummarySample {
  std::vector<TokenId> ids;             // y_1..y_M
  std::vector<ad::Tensor> logits;       // M steps
  std::vector<ad::Tensor> extra_logits; // E steps past M
  std::vector<ad::Tensor> embeddings;   // what the reconstructor's encoder reads
};

struct ForwardResult {
  SummarySample summary;
  std::vector<ad::Tensor> reconstruction_logits;  // N steps
  LossBundle losses;
  Randomness randomness;
  bool topic_fallback = false;
  bool topic_degenerate = false;
};

// Replaces each non-SOS input with UNK with probability `rate`.
std::vector<TokenId> word_dropout(const std::vector<TokenId>& ids, double rate, Rng& rng);

class Seq3Model {
 public:
  Seq3Model(const Seq3Config& config, std::size_t vocab_size, Rng& rng,
            std::optional<ad::Tensor> embeddings = std::nullopt);
  Seq3Model(const Seq3Model&) = delete;
  Seq3Model& operator=(const Seq3Model&) = delete;
  Seq3Model(Seq3Model&&) = default;

  // Full training pass over one sentence. `lm` may be null, in which case
  // the prior loss is a constant zero. With `replay` no randomness is drawn.
  ForwardResult forward(const std::vector<TokenId>& x, const LmModel* lm, const IdfTable& idf, Rng& rng,
                        const Randomness* replay = nullptr) const;

  // Greedy decoding of M = max(min_length, round(ratio N)) words, stopping
  // early at EOS.
  std::vector<TokenId> summarize(const std::vector<TokenId>& x, double ratio) const;

  // Teacher-forced reconstruction of x from a given summary, without word
  // dropout. Returns the argmax prediction at each position.
  std::vector<TokenId> reconstruct(const std::vector<TokenId>& summary, const std::vector<TokenId>& x) const;

  const Seq3Config& config() const { return config_; }
  std::size_t vocab_size() const { return vocab_size_; }
  ParameterStore& parameters() { return store_; }
  const ParameterStore& parameters() const { return store_; }
  const ad::Tensor& embeddings() const { return embeddings_; }
  const BiLstmEncoder& encoder() const { return encoder_; }
  const AttentionDecoder& compressor() const { return compressor_; }
  const AttentionDecoder& reconstructor() const { return reconstructor_; }

  static std::size_t parameter_count(const Seq3Config& config, std::size_t vocab_size);

 private:
  std::vector<ad::Tensor> embed(const std::vector<TokenId>& ids) const;

  Seq3Config config_;
  std::size_t vocab_size_ = 0;
  ParameterStore store_;
  ad::Tensor embeddings_;
  BiLstmEncoder encoder_;
  AttentionDecoder compressor_;
  AttentionDecoder reconstructor_;
};

// One line of the training log.
struct TrainRecord {
  std::size_t step = 0;
  std::size_t epoch = 0;
  double reconstruction = 0.0;
  double prior = 0.0;
  double topic = 0.0;
  double length = 0.0;
  double total = 0.0;
  double lr = 0.0;
  double grad_norm = 0.0;
  std::size_t batch_size = 0;
  std::size_t tokens = 0;

  std::string to_json() const;
};

struct EpochSummary {
  std::size_t epoch = 0;
  std::size_t steps = 0;
  double mean_total = 0.0;
  double first_batch_total = 0.0;  // loss of the epoch's first batch, before its update
};

class Seq3Trainer {
 public:
  Seq3Trainer(Seq3Model& model, const LmModel* lm, const IdfTable& idf, Rng& rng);

  // One optimizer step on the mean loss of `batch`. DivergenceError when the
  // total is not finite.
  TrainRecord train_batch(const std::vector<const std::vector<TokenId>*>& batch);
  // Shuffles and runs one epoch; each record is passed to `on_step`.
  EpochSummary run_epoch(const std::vector<std::vector<TokenId>>& corpus,
                         const std::function<void(const TrainRecord&)>& on_step = {});

  std::size_t epochs_done() const { return epochs_done_; }
  std::size_t steps_done() const { return steps_done_; }
  Adam& optimizer() { return adam_; }
  Rng& rng() { return rng_; }

  Checkpoint checkpoint(std::uint64_t vocab_hash, const std::string& echo = "") const;
  void resume(const Checkpoint& checkpoint);

 private:
  Seq3Model& model_;
  const LmModel* lm_;
  const IdfTable& idf_;
  Rng& rng_;
  Adam adam_;
  std::size_t epochs_done_ = 0;
  std::size_t steps_done_ = 0;
  std::size_t batch_index_ = 0;
};

Checkpoint make_seq3_checkpoint(const Seq3Model& model, std::uint64_t vocab_hash, const std::string& echo = "");
// CompatibilityError on a kind or vocabulary-hash mismatch.
void check_seq3_checkpoint(const Checkpoint& checkpoint, std::uint64_t vocab_hash);
Seq3Model seq3_from_checkpoint(const Checkpoint& checkpoint, std::uint64_t vocab_hash, std::size_t vocab_size);

// Raw tokenized sentence to summary text, OOV words restored.
Sentence compress(const Seq3Model& model, const Vocabulary& vocab, const Sentence& sentence, double ratio = 0.5);

}  // namespace seq3
