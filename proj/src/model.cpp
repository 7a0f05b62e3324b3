#include "seq3/model.hpp"

#include <cmath>
#include "json.hpp"

#include "seq3/errors.hpp"

namespace seq3 {

using ad::Tensor;

// ---- configuration -------------------------------------------------------------

Seq3Config Seq3Config::desk() {
  Seq3Config c;
  c.embedding_dim = 32;
  c.encoder_hidden = 32;
  c.encoder_layers = 1;
  c.decoder_hidden = 64;
  c.decoder_layers = 1;
  c.batch_size = 16;
  c.lr = 1e-2;
  c.clip_norm = 5.0;
  return c;
}

void Seq3Config::validate() const {
  if (embedding_dim == 0 || encoder_hidden == 0 || encoder_layers == 0 || decoder_hidden == 0 ||
      decoder_layers == 0 || batch_size == 0 || epochs == 0)
    throw InputError("model config: sizes must be positive");
  if (extra_steps == 0) throw InputError("model config: extra_steps must be at least 1");
  if (!(word_dropout >= 0.0 && word_dropout < 1.0)) throw InputError("model config: word_dropout must be in [0, 1)");
  if (!(lr > 0.0)) throw InputError("model config: lr must be positive");
  if (clip_norm < 0.0) throw InputError("model config: clip_norm must be >= 0");
  if (!(inference_ratio > 0.0)) throw InputError("model config: inference_ratio must be positive");
  sampling.validate();
  loss.validate();
}

void Seq3Config::bind(ConfigBinder& b, const std::string& p, const std::string& lp) {
  b.bind(p + "embedding_dim", embedding_dim);
  b.bind(p + "encoder_hidden", encoder_hidden);
  b.bind(p + "encoder_layers", encoder_layers);
  b.bind(p + "decoder_hidden", decoder_hidden);
  b.bind(p + "decoder_layers", decoder_layers);
  b.bind(
      p + "sampling", [this] { return to_string(sampling.mode); },
      [this](const std::string& v) { sampling.mode = parse_sampling_mode(v); });
  b.bind(p + "tau", sampling.tau);
  b.bind(p + "learned_tau", sampling.learned_tau);
  b.bind(p + "tau0", sampling.tau0);
  b.bind(p + "alpha", sampling.alpha);
  b.bind(p + "beta", sampling.beta);
  b.bind(p + "min_length", sampling.min_length);
  b.bind(p + "word_dropout", word_dropout);
  b.bind(p + "lr", lr);
  b.bind(p + "batch_size", batch_size);
  b.bind(p + "epochs", epochs);
  b.bind(p + "extra_steps", extra_steps);
  b.bind(p + "clip_norm", clip_norm);
  b.bind(p + "countdown_init", countdown_init);
  b.bind(p + "length_scale_init", length_scale_init);
  b.bind(p + "inference_ratio", inference_ratio);
  b.bind(p + "check_bottleneck", check_bottleneck);
  loss.bind(b, lp);
}

std::string Seq3Config::to_text() const {
  Seq3Config copy = *this;
  ConfigBinder b;
  copy.bind(b, "", "loss.");
  return format_key_values(b.values());
}

Seq3Config Seq3Config::from_text(const std::string& text) {
  Seq3Config c;
  ConfigBinder b;
  c.bind(b, "", "loss.");
  b.set_all(parse_key_values(text, "model config"));
  c.validate();
  return c;
}

// ---- model ---------------------------------------------------------------------

std::vector<TokenId> word_dropout(const std::vector<TokenId>& ids, double rate, Rng& rng) {
  if (!(rate >= 0.0 && rate < 1.0)) throw InputError("word_dropout: rate must be in [0, 1)");
  std::vector<TokenId> out = ids;
  if (rate == 0.0) return out;
  for (TokenId& id : out)
    if (id != kSos && rng.bernoulli(rate)) id = kUnk;
  return out;
}

namespace {

DecoderConfig decoder_config(const Seq3Config& c, std::size_t vocab_size, bool learned_temperature) {
  DecoderConfig d;
  d.embedding_dim = c.embedding_dim;
  d.encoder_output = 2 * c.encoder_hidden;
  d.hidden = c.decoder_hidden;
  d.layers = c.decoder_layers;
  d.vocab_size = vocab_size;
  d.countdown_init = c.countdown_init;
  d.length_scale_init = c.length_scale_init;
  d.learned_temperature = learned_temperature;
  return d;
}

double countdown(std::size_t length, std::size_t step) {
  return step > length ? 0.0 : static_cast<double>(length - step + 1);
}

}  // namespace

Seq3Model::Seq3Model(const Seq3Config& config, std::size_t vocab_size, Rng& rng, std::optional<Tensor> embeddings)
    : config_(config), vocab_size_(vocab_size) {
  config.validate();
  if (vocab_size <= kUnk) throw InputError("model: vocabulary too small");
  if (embeddings) {
    if (embeddings->shape() != ad::Shape{vocab_size, config.embedding_dim})
      throw DimensionError("model: embedding matrix " + ad::shape_str(embeddings->shape()) + ", expected " +
                           ad::shape_str({vocab_size, config.embedding_dim}));
    embeddings_ = store_.add("embed", *embeddings);
  } else {
    embeddings_ = init_uniform(store_, "embed", {vocab_size, config.embedding_dim}, kEmbeddingInitRange, rng);
  }
  encoder_ = BiLstmEncoder(store_, "enc", config.embedding_dim, config.encoder_hidden, config.encoder_layers, rng);
  compressor_ = AttentionDecoder(store_, "comp", decoder_config(config, vocab_size, config.sampling.learned_tau),
                                 embeddings_, rng);
  reconstructor_ = AttentionDecoder(store_, "rec", decoder_config(config, vocab_size, false), embeddings_, rng);
  if (store_.element_count() != parameter_count(config, vocab_size))
    throw ContractError("model: parameter count " + std::to_string(store_.element_count()) +
                        " differs from the analytic count " + std::to_string(parameter_count(config, vocab_size)));
}

std::size_t Seq3Model::parameter_count(const Seq3Config& c, std::size_t v) {
  return v * c.embedding_dim + BiLstmEncoder::parameter_count(c.embedding_dim, c.encoder_hidden, c.encoder_layers) +
         AttentionDecoder::parameter_count(decoder_config(c, v, c.sampling.learned_tau)) +
         AttentionDecoder::parameter_count(decoder_config(c, v, false));
}

std::vector<Tensor> Seq3Model::embed(const std::vector<TokenId>& ids) const {
  std::vector<Tensor> out;
  out.reserve(ids.size());
  for (TokenId id : ids) {
    if (id >= vocab_size_)
      throw IndexError("model: token id " + std::to_string(id) + " outside vocabulary of " + std::to_string(vocab_size_));
    out.push_back(ad::embedding(embeddings_, id));
  }
  return out;
}

ForwardResult Seq3Model::forward(const std::vector<TokenId>& x, const LmModel* lm, const IdfTable& idf, Rng& rng,
                                 const Randomness* replay) const {
  if (x.empty()) throw InputError("forward: empty input sentence");
  if (idf.size() != vocab_size_)
    throw DimensionError("forward: idf table has " + std::to_string(idf.size()) + " entries for a vocabulary of " +
                         std::to_string(vocab_size_));
  if (lm && lm->vocab_size() != vocab_size_) throw DimensionError("forward: LM vocabulary differs from the model's");
  const SamplingConfig& sc = config_.sampling;
  if (sc.mode == SamplingMode::Greedy) throw InputError("forward: greedy sampling is inference-only");
  const std::size_t n = x.size();
  const std::size_t extra = config_.extra_steps;

  ForwardResult out;
  Randomness& rand = out.randomness;
  rand.target_length = replay ? replay->target_length : sample_target_length(n, sc.alpha, sc.beta, rng, sc.min_length);
  const std::size_t m = rand.target_length;
  if (replay && replay->noise.size() != m + extra - 1) throw InputError("forward: replayed noise has the wrong length");

  // Compressor.
  std::vector<Tensor> source = embed(x);
  EncoderOutput enc = encoder_.encode(source);
  DecoderState state = compressor_.init(enc, m, n);
  Tensor input = ad::embedding(embeddings_, kSos);
  SummarySample& summary = out.summary;
  for (std::size_t k = 1; k <= m + extra; ++k) {
    DecoderStep step = compressor_.step(enc, state, input, countdown(m, k));
    state = step.state;
    if (k <= m)
      summary.logits.push_back(step.logits);
    else
      summary.extra_logits.push_back(step.logits);
    if (k == m + extra) break;

    std::vector<double> noise;
    if (sc.mode != SamplingMode::SoftArgmax)
      noise = replay ? replay->noise[k - 1] : gumbel_noise(vocab_size_, rng);
    rand.noise.push_back(noise);

    SampledWord word;
    if (sc.learned_tau) {
      Tensor tau = learned_temperature(step.hidden, compressor_.temperature_weight(), sc.tau0);
      if (sc.mode == SamplingMode::SoftArgmax)
        noise.assign(vocab_size_, 0.0);
      word = sc.mode == SamplingMode::GumbelST ? straight_through_embedding(step.logits, tau, embeddings_, noise)
                                               : gumbel_softmax_embedding(step.logits, tau, embeddings_, noise);
    } else if (sc.mode == SamplingMode::SoftArgmax) {
      word.embedding = soft_argmax_embedding(step.logits, sc.tau, embeddings_);
      word.id = argmax(step.logits.values());
    } else if (sc.mode == SamplingMode::GumbelST) {
      word = straight_through_embedding(step.logits, sc.tau, embeddings_, noise);
    } else {
      word = gumbel_softmax_embedding(step.logits, sc.tau, embeddings_, noise);
    }
    if (k <= m) {
      summary.ids.push_back(word.id);
      summary.embeddings.push_back(word.embedding);
    }
    input = word.embedding;
  }

  if (config_.check_bottleneck && sc.mode == SamplingMode::GumbelST) {
    const std::size_t d = config_.embedding_dim;
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < d; ++j)
        if (summary.embeddings[i][j] != embeddings_[summary.ids[i] * d + j])
          throw ContractError("bottleneck: summary word " + std::to_string(i) + " is not an exact embedding row");
  }

  // Reconstructor.
  EncoderOutput enc2 = encoder_.encode(summary.embeddings);
  DecoderState rstate = reconstructor_.init(enc2, n, m);
  if (replay) {
    if (replay->reconstructor_inputs.size() != n) throw InputError("forward: replayed inputs have the wrong length");
    rand.reconstructor_inputs = replay->reconstructor_inputs;
  } else {
    std::vector<TokenId> teacher(n);
    teacher[0] = kSos;
    for (std::size_t i = 1; i < n; ++i) teacher[i] = x[i - 1];
    rand.reconstructor_inputs = word_dropout(teacher, config_.word_dropout, rng);
  }
  for (std::size_t k = 1; k <= n; ++k) {
    DecoderStep step = reconstructor_.step(enc2, rstate, ad::embedding(embeddings_, rand.reconstructor_inputs[k - 1]),
                                           countdown(n, k));
    rstate = step.state;
    out.reconstruction_logits.push_back(step.logits);
  }

  // Losses.
  Tensor l_r = reconstruction_loss(out.reconstruction_logits, x);
  Tensor l_p = Tensor::scalar(0.0);
  if (lm) {
    std::vector<Tensor> logs;
    auto lm_state = lm->start();
    logs.push_back(lm->step(lm_state, kSos));
    for (std::size_t t = 0; t + 1 < m; ++t) logs.push_back(lm->step(lm_state, summary.ids[t]));
    l_p = lm_prior_loss(summary.logits, logs);
  }
  std::vector<double> weights(n);
  for (std::size_t i = 0; i < n; ++i) weights[i] = idf.idf(x[i]);
  TopicLossResult topic = topic_loss(source, weights, summary.embeddings);
  out.topic_fallback = topic.unweighted_fallback;
  out.topic_degenerate = topic.degenerate;
  Tensor l_l = length_penalty(summary.extra_logits, kEos);
  out.losses = total_loss(l_r, l_p, topic.loss, l_l, config_.loss);
  return out;
}

std::vector<TokenId> Seq3Model::summarize(const std::vector<TokenId>& x, double ratio) const {
  if (x.empty()) throw InputError("summarize: empty input sentence");
  const std::size_t n = x.size();
  const std::size_t m = inference_target_length(n, ratio, config_.sampling.min_length);
  EncoderOutput enc = encoder_.encode(embed(x));
  DecoderState state = compressor_.init(enc, m, n);
  Tensor input = ad::embedding(embeddings_, kSos);
  std::vector<TokenId> out;
  for (std::size_t k = 1; k <= m; ++k) {
    DecoderStep step = compressor_.step(enc, state, input, countdown(m, k));
    state = step.state;
    SampledWord word = greedy_embedding(step.logits, embeddings_);
    if (word.id == kEos) break;
    out.push_back(word.id);
    input = word.embedding;
  }
  return out;
}

std::vector<TokenId> Seq3Model::reconstruct(const std::vector<TokenId>& summary, const std::vector<TokenId>& x) const {
  if (summary.empty() || x.empty()) throw InputError("reconstruct: empty summary or target");
  const std::size_t n = x.size();
  EncoderOutput enc = encoder_.encode(embed(summary));
  DecoderState state = reconstructor_.init(enc, n, summary.size());
  std::vector<TokenId> out;
  TokenId prev = kSos;
  for (std::size_t k = 1; k <= n; ++k) {
    DecoderStep step = reconstructor_.step(enc, state, ad::embedding(embeddings_, prev), countdown(n, k));
    state = step.state;
    out.push_back(argmax(step.logits.values()));
    prev = x[k - 1];
  }
  return out;
}

// ---- training --------------------------------------------------------------------

std::string TrainRecord::to_json() const {
  nlohmann::ordered_json j;
  j["step"] = step;
  j["epoch"] = epoch;
  j["loss_r"] = reconstruction;
  j["loss_p"] = prior;
  j["loss_t"] = topic;
  j["loss_l"] = length;
  j["total"] = total;
  j["lr"] = lr;
  j["grad_norm"] = grad_norm;
  j["batch"] = batch_size;
  j["tokens"] = tokens;
  return j.dump();
}

Seq3Trainer::Seq3Trainer(Seq3Model& model, const LmModel* lm, const IdfTable& idf, Rng& rng)
    : model_(model), lm_(lm), idf_(idf), rng_(rng) {
  AdamConfig ac;
  ac.lr = model.config().lr;
  ac.clip_norm = model.config().clip_norm;
  adam_ = Adam(ac);
}

TrainRecord Seq3Trainer::train_batch(const std::vector<const std::vector<TokenId>*>& batch) {
  if (batch.empty()) throw InputError("train_batch: empty batch");
  const double scale = 1.0 / static_cast<double>(batch.size());
  TrainRecord rec;
  rec.epoch = epochs_done_ + 1;
  rec.batch_size = batch.size();
  for (const auto* x : batch) {
    ForwardResult r = model_.forward(*x, lm_, idf_, rng_);
    const double total = r.losses.total.item();
    if (!std::isfinite(total)) {
      model_.parameters().clear_grad();
      throw DivergenceError("non-finite loss at batch " + std::to_string(batch_index_) + " (epoch " +
                            std::to_string(rec.epoch) + ")");
    }
    rec.reconstruction += r.losses.reconstruction.item() * scale;
    rec.prior += r.losses.prior.item() * scale;
    rec.topic += r.losses.topic.item() * scale;
    rec.length += r.losses.length.item() * scale;
    rec.total += total * scale;
    rec.tokens += x->size();
    ad::backward(ad::scale(r.losses.total, scale));
  }
  rec.lr = adam_.config().lr;
  rec.grad_norm = adam_.step(model_.parameters());
  model_.parameters().clear_grad();
  rec.step = ++steps_done_;
  ++batch_index_;
  return rec;
}

EpochSummary Seq3Trainer::run_epoch(const std::vector<std::vector<TokenId>>& corpus,
                                    const std::function<void(const TrainRecord&)>& on_step) {
  if (corpus.empty()) throw InputError("train: empty corpus");
  std::vector<std::size_t> order(corpus.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng_.below(i)]);

  EpochSummary summary;
  summary.epoch = epochs_done_ + 1;
  batch_index_ = 0;
  double sum = 0.0;
  const std::size_t bs = model_.config().batch_size;
  std::vector<const std::vector<TokenId>*> batch;
  for (std::size_t begin = 0; begin < order.size(); begin += bs) {
    batch.clear();
    for (std::size_t i = begin; i < std::min(order.size(), begin + bs); ++i) batch.push_back(&corpus[order[i]]);
    TrainRecord rec = train_batch(batch);
    if (summary.steps == 0) summary.first_batch_total = rec.total;
    sum += rec.total;
    ++summary.steps;
    if (on_step) on_step(rec);
  }
  summary.mean_total = sum / static_cast<double>(summary.steps);
  ++epochs_done_;
  return summary;
}

Checkpoint Seq3Trainer::checkpoint(std::uint64_t vocab_hash, const std::string& echo) const {
  Checkpoint ck = make_seq3_checkpoint(model_, vocab_hash, echo);
  ck.epoch = epochs_done_;
  ck.step = steps_done_;
  capture_optimizer(ck, adam_);
  ck.rng_state = rng_.state();
  return ck;
}

void Seq3Trainer::resume(const Checkpoint& ck) {
  restore(model_.parameters(), ck.tensors);
  restore_optimizer(ck, adam_);
  epochs_done_ = ck.epoch;
  steps_done_ = ck.step;
  if (!ck.rng_state.empty()) rng_.set_state(ck.rng_state);
}

Checkpoint make_seq3_checkpoint(const Seq3Model& model, std::uint64_t vocab_hash, const std::string& echo) {
  Checkpoint ck;
  ck.kind = "seq3";
  ck.config = model.config().to_text();
  ck.echo = echo;
  ck.vocab_hash = vocab_hash;
  ck.tensors = snapshot(model.parameters());
  return ck;
}

void check_seq3_checkpoint(const Checkpoint& ck, std::uint64_t vocab_hash) {
  if (ck.kind != "seq3") throw CompatibilityError("checkpoint holds a '" + ck.kind + "' model, expected 'seq3'");
  if (ck.vocab_hash != vocab_hash)
    throw CompatibilityError("checkpoint was trained with a different vocabulary (hash mismatch)");
}

Seq3Model seq3_from_checkpoint(const Checkpoint& ck, std::uint64_t vocab_hash, std::size_t vocab_size) {
  check_seq3_checkpoint(ck, vocab_hash);
  Rng scratch(0);
  Seq3Model model(Seq3Config::from_text(ck.config), vocab_size, scratch);
  restore(model.parameters(), ck.tensors);
  return model;
}

Sentence compress(const Seq3Model& model, const Vocabulary& vocab, const Sentence& sentence, double ratio) {
  if (sentence.empty()) throw InputError("compress: empty sentence");
  if (vocab.size() != model.vocab_size()) throw CompatibilityError("compress: vocabulary does not match the model");
  EncodedSentence enc = encode_with_oov(sentence, vocab);
  return decode_restore(model.summarize(enc.ids, ratio), enc.oov, vocab);
}

}  // namespace seq3
