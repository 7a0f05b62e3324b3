#include "seq3/lm.hpp"

#include <cmath>

#include "seq3/errors.hpp"

namespace seq3 {

using ad::Tensor;

LmConfig LmConfig::desk() {
  LmConfig c;
  c.hidden = 64;
  c.embedding_dim = 32;
  c.epochs = 5;
  c.batch_size = 16;
  c.lr = 3e-3;
  return c;
}

void LmConfig::validate() const {
  if (layers == 0 || hidden == 0 || embedding_dim == 0 || epochs == 0 || batch_size == 0 || decay_every == 0)
    throw InputError("lm config: sizes must be positive");
  for (double r : {embedding_dropout, output_dropout})
    if (!(r >= 0.0 && r < 1.0)) throw InputError("lm config: dropout rates must be in [0, 1)");
  if (!(decay_gamma > 0.0 && decay_gamma <= 1.0)) throw InputError("lm config: decay_gamma must be in (0, 1]");
  if (!(lr > 0.0)) throw InputError("lm config: lr must be positive");
  if (clip_norm < 0.0) throw InputError("lm config: clip_norm must be >= 0");
}

void LmConfig::bind(ConfigBinder& b, const std::string& p) {
  b.bind(p + "layers", layers);
  b.bind(p + "hidden", hidden);
  b.bind(p + "embedding_dim", embedding_dim);
  b.bind(p + "embedding_dropout", embedding_dropout);
  b.bind(p + "output_dropout", output_dropout);
  b.bind(p + "epochs", epochs);
  b.bind(p + "batch_size", batch_size);
  b.bind(p + "lr", lr);
  b.bind(p + "decay_gamma", decay_gamma);
  b.bind(p + "decay_every", decay_every);
  b.bind(p + "clip_norm", clip_norm);
}

double lm_learning_rate(const LmConfig& config, std::size_t completed_epochs) {
  return config.lr * std::pow(config.decay_gamma, static_cast<double>(completed_epochs / config.decay_every));
}

LmModel::LmModel(const LmConfig& config, std::size_t vocab_size, Rng& rng) : config_(config), vocab_size_(vocab_size) {
  config.validate();
  if (vocab_size <= kEos) throw InputError("lm: vocabulary too small");
  const double range = 1.0 / std::sqrt(static_cast<double>(config.hidden));
  embeddings_ = init_uniform(store_, "lm.embed", {vocab_size, config.embedding_dim}, kEmbeddingInitRange, rng);
  rnn_ = LstmStack(store_, "lm.rnn", config.embedding_dim, config.hidden, config.layers, rng);
  w_out_ = init_uniform(store_, "lm.out.w", {vocab_size, config.hidden}, range, rng);
  b_out_ = init_constant(store_, "lm.out.b", {vocab_size}, 0.0);
}

std::size_t LmModel::parameter_count(const LmConfig& c, std::size_t v) {
  return v * c.embedding_dim + LstmStack::parameter_count(c.embedding_dim, c.hidden, c.layers) + v * c.hidden + v;
}

LmModel::State LmModel::start() const { return {rnn_.zero_state()}; }

namespace {

Tensor dropout(const Tensor& x, double rate, Rng* rng) {
  if (rng == nullptr || rate == 0.0) return x;
  std::vector<double> mask(x.size());
  const double keep = 1.0 / (1.0 - rate);
  for (double& m : mask) m = rng->bernoulli(rate) ? 0.0 : keep;
  return ad::apply_mask(x, std::move(mask));
}

}  // namespace

Tensor LmModel::step(State& state, TokenId id, Rng* rng) const {
  if (id >= vocab_size_)
    throw IndexError("lm: token id " + std::to_string(id) + " outside vocabulary of " + std::to_string(vocab_size_));
  if (frozen_) rng = nullptr;
  Tensor x = dropout(ad::embedding(embeddings_, id), config_.embedding_dropout, rng);
  state.layers = rnn_.step(x, state.layers);
  Tensor h = dropout(state.layers.back().h, config_.output_dropout, rng);
  return ad::log_softmax(ad::add(ad::matvec(w_out_, h), b_out_));
}

void LmModel::freeze() {
  store_.set_frozen(true);
  store_.clear_grad();
  frozen_ = true;
}

void LmModel::unfreeze() {
  store_.set_frozen(false);
  frozen_ = false;
}

std::vector<double> lm_distribution(const LmModel& model, const std::vector<TokenId>& prefix) {
  if (prefix.empty() || prefix.front() != kSos) throw InputError("lm_distribution: prefix must start with <s>");
  auto state = model.start();
  Tensor lp;
  for (TokenId id : prefix) lp = model.step(state, id);
  return {lp.values().begin(), lp.values().end()};
}

Tensor sentence_nll(const LmModel& model, const std::vector<TokenId>& ids, Rng* dropout) {
  auto state = model.start();
  std::vector<Tensor> terms;
  terms.reserve(ids.size() + 1);
  TokenId prev = kSos;
  for (std::size_t t = 0; t <= ids.size(); ++t) {
    const TokenId target = t < ids.size() ? ids[t] : kEos;
    Tensor lp = model.step(state, prev, dropout);
    terms.push_back(ad::scale(ad::slice(lp, target, 1), -1.0));
    prev = target;
  }
  return ad::sum(ad::concat(terms));
}

LmTrainer::LmTrainer(LmModel& model, Rng& rng) : model_(model), rng_(rng) {
  AdamConfig ac;
  ac.lr = model.config().lr;
  ac.clip_norm = model.config().clip_norm;
  adam_ = Adam(ac);
}

void LmTrainer::resume(std::size_t epochs_done, const Checkpoint& checkpoint) {
  epochs_done_ = epochs_done;
  restore_optimizer(checkpoint, adam_);
}

LmEpochReport LmTrainer::run_epoch(const std::vector<std::vector<TokenId>>& corpus) {
  if (corpus.empty()) throw InputError("train_lm: empty corpus");
  if (model_.frozen()) model_.unfreeze();
  const LmConfig& cfg = model_.config();
  LmEpochReport report;
  report.lr = lm_learning_rate(cfg, epochs_done_);
  adam_.config().lr = report.lr;

  std::vector<std::size_t> order(corpus.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng_.below(i)]);

  double nll = 0.0;
  std::size_t tokens = 0;
  auto& store = model_.parameters();
  for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch_size) {
    const std::size_t end = std::min(order.size(), begin + cfg.batch_size);
    std::size_t batch_tokens = 0;
    for (std::size_t i = begin; i < end; ++i) batch_tokens += corpus[order[i]].size() + 1;
    for (std::size_t i = begin; i < end; ++i) {
      Tensor loss = sentence_nll(model_, corpus[order[i]], &rng_);
      nll += loss.item();
      ad::backward(ad::scale(loss, 1.0 / static_cast<double>(batch_tokens)));
    }
    tokens += batch_tokens;
    adam_.step(store);
    store.clear_grad();
    ++report.steps;
  }
  ++epochs_done_;
  report.epoch = epochs_done_;
  report.perplexity = std::exp(nll / static_cast<double>(tokens));
  return report;
}

LmModel train_lm(const std::vector<std::vector<TokenId>>& corpus, const LmConfig& config, std::size_t vocab_size,
                 Rng& rng, const std::function<void(const LmEpochReport&)>& on_epoch) {
  if (corpus.empty()) throw InputError("train_lm: empty corpus");
  LmModel model(config, vocab_size, rng);
  LmTrainer trainer(model, rng);
  for (std::size_t e = 0; e < config.epochs; ++e) {
    auto report = trainer.run_epoch(corpus);
    if (on_epoch) on_epoch(report);
  }
  model.freeze();
  return model;
}

Checkpoint make_lm_checkpoint(const LmModel& model, std::uint64_t vocab_hash, std::size_t epochs_done,
                              const Adam* adam, const Rng* rng) {
  Checkpoint ck;
  ck.kind = "lm";
  ConfigBinder b;
  LmConfig cfg = model.config();
  cfg.bind(b, "");
  ck.config = format_key_values(b.values());
  ck.vocab_hash = vocab_hash;
  ck.epoch = epochs_done;
  ck.tensors = snapshot(model.parameters());
  if (adam) {
    capture_optimizer(ck, *adam);
    ck.step = adam->steps();
  }
  if (rng) ck.rng_state = rng->state();
  return ck;
}

LmModel lm_from_checkpoint(const Checkpoint& ck, std::uint64_t vocab_hash, std::size_t vocab_size) {
  if (ck.kind != "lm") throw CompatibilityError("checkpoint holds a '" + ck.kind + "' model, expected 'lm'");
  if (ck.vocab_hash != vocab_hash) throw CompatibilityError("lm checkpoint was trained with a different vocabulary");
  LmConfig cfg;
  ConfigBinder b;
  cfg.bind(b, "");
  b.set_all(parse_key_values(ck.config, "lm checkpoint config"));
  Rng scratch(0);
  LmModel model(cfg, vocab_size, scratch);
  restore(model.parameters(), ck.tensors);
  model.freeze();
  return model;
}

}  // namespace seq3
