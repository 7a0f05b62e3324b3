#pragma once
// Recurrent language model used as a frozen prior over summaries.

#include <functional>
#include <string>
#include <vector>

#include "seq3/checkpoint.hpp"
#include "seq3/coders.hpp"
#include "seq3/keyvalue.hpp"
#include "seq3/params.hpp"
#include "seq3/vocab.hpp"

namespace seq3 {

struct LmConfig {
  std::size_t layers = 2;
  std::size_t hidden = 1024;
  std::size_t embedding_dim = 256;  // the LM's own table, not shared
  double embedding_dropout = 0.2;
  double output_dropout = 0.5;
  std::size_t epochs = 30;
  std::size_t batch_size = 128;
  double lr = 1e-3;
  double decay_gamma = 0.5;
  std::size_t decay_every = 10;  // epochs
  double clip_norm = 0.0;

  static LmConfig full_size() { return {}; }
  static LmConfig desk();
  void validate() const;
  void bind(ConfigBinder& binder, const std::string& prefix);
};

// Learning rate in force after `completed_epochs` epochs.
double lm_learning_rate(const LmConfig& config, std::size_t completed_epochs);

class LmModel {
 public:
  struct State {
    std::vector<LstmState> layers;
  };

  LmModel(const LmConfig& config, std::size_t vocab_size, Rng& rng);
  LmModel(const LmModel&) = delete;
  LmModel& operator=(const LmModel&) = delete;
  LmModel(LmModel&&) = default;
  LmModel& operator=(LmModel&&) = default;

  State start() const;
  // Consumes `id` and returns log p(next | everything consumed). With a
  // dropout rng the training-time dropout masks are applied.
  ad::Tensor step(State& state, TokenId id, Rng* dropout = nullptr) const;

  // Frozen: parameters record no gradients and no dropout is ever applied.
  void freeze();
  void unfreeze();
  bool frozen() const { return frozen_; }

  ParameterStore& parameters() { return store_; }
  const ParameterStore& parameters() const { return store_; }
  const LmConfig& config() const { return config_; }
  std::size_t vocab_size() const { return vocab_size_; }

  static std::size_t parameter_count(const LmConfig& config, std::size_t vocab_size);

 private:
  LmConfig config_;
  std::size_t vocab_size_ = 0;
  bool frozen_ = false;
  ParameterStore store_;
  ad::Tensor embeddings_;
  LstmStack rnn_;
  ad::Tensor w_out_, b_out_;
};

// Next-token log-distribution after `prefix`, which must start with SOS.
std::vector<double> lm_distribution(const LmModel& model, const std::vector<TokenId>& prefix);

// -log p(x_1..x_N, EOS | SOS), summed over the N+1 predictions.
ad::Tensor sentence_nll(const LmModel& model, const std::vector<TokenId>& ids, Rng* dropout = nullptr);

struct LmEpochReport {
  std::size_t epoch = 0;  // 1-based
  double perplexity = 0.0;
  double lr = 0.0;
  std::size_t steps = 0;  // optimizer steps in this epoch
};

// Epoch-at-a-time trainer holding the optimizer and the schedule position.
class LmTrainer {
 public:
  LmTrainer(LmModel& model, Rng& rng);

  LmEpochReport run_epoch(const std::vector<std::vector<TokenId>>& corpus);
  std::size_t epochs_done() const { return epochs_done_; }
  Adam& optimizer() { return adam_; }
  void resume(std::size_t epochs_done, const Checkpoint& checkpoint);

 private:
  LmModel& model_;
  Rng& rng_;
  Adam adam_;
  std::size_t epochs_done_ = 0;
};

// Trains for config.epochs and returns the model frozen.
LmModel train_lm(const std::vector<std::vector<TokenId>>& corpus, const LmConfig& config, std::size_t vocab_size,
                 Rng& rng, const std::function<void(const LmEpochReport&)>& on_epoch = {});

Checkpoint make_lm_checkpoint(const LmModel& model, std::uint64_t vocab_hash, std::size_t epochs_done,
                              const Adam* adam = nullptr, const Rng* rng = nullptr);
// Rebuilds the model (frozen) from a checkpoint; CompatibilityError on a kind
// or vocabulary mismatch.
LmModel lm_from_checkpoint(const Checkpoint& checkpoint, std::uint64_t vocab_hash, std::size_t vocab_size);

}  // namespace seq3
