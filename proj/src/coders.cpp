#include "seq3/coders.hpp"

#include <cmath>

#include "seq3/errors.hpp"

namespace seq3 {

using ad::Tensor;

Tensor init_uniform(ParameterStore& store, const std::string& name, ad::Shape shape, double range, Rng& rng) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(-range, range);
  return store.add(name, Tensor::parameter(std::move(v), std::move(shape)));
}

Tensor init_constant(ParameterStore& store, const std::string& name, ad::Shape shape, double value) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return store.add(name, Tensor::parameter(std::vector<double>(n, value), std::move(shape)));
}

// ---- LSTM ------------------------------------------------------------------

LstmCell::LstmCell(ParameterStore& store, const std::string& name, std::size_t input, std::size_t hidden, Rng& rng)
    : input_(input), hidden_(hidden) {
  const double range = 1.0 / std::sqrt(static_cast<double>(hidden));
  weight_ = init_uniform(store, name + ".w", {4 * hidden, input + hidden}, range, rng);
  bias_ = init_uniform(store, name + ".b", {4 * hidden}, range, rng);
}

LstmState LstmCell::step(const Tensor& x, const LstmState& prev) const {
  if (x.size() != input_)
    throw DimensionError("lstm: input of size " + std::to_string(x.size()) + ", expected " + std::to_string(input_));
  const std::size_t h = hidden_;
  Tensor gates = ad::add(ad::matvec(weight_, ad::concat({x, prev.h})), bias_);
  Tensor in = ad::sigmoid(ad::slice(gates, 0, h));
  Tensor forget = ad::sigmoid(ad::slice(gates, h, h));
  Tensor cand = ad::tanh(ad::slice(gates, 2 * h, h));
  Tensor out = ad::sigmoid(ad::slice(gates, 3 * h, h));
  Tensor c = ad::add(ad::mul(forget, prev.c), ad::mul(in, cand));
  return {ad::mul(out, ad::tanh(c)), c};
}

LstmState LstmCell::zero_state() const { return {Tensor::zeros({hidden_}), Tensor::zeros({hidden_})}; }

LstmStack::LstmStack(ParameterStore& store, const std::string& name, std::size_t input, std::size_t hidden,
                     std::size_t layers, Rng& rng) {
  if (layers == 0) throw InputError("lstm stack needs at least one layer");
  for (std::size_t l = 0; l < layers; ++l)
    cells_.emplace_back(store, name + ".l" + std::to_string(l), l == 0 ? input : hidden, hidden, rng);
}

std::vector<LstmState> LstmStack::step(const Tensor& x, const std::vector<LstmState>& prev) const {
  std::vector<LstmState> next;
  next.reserve(cells_.size());
  Tensor in = x;
  for (std::size_t l = 0; l < cells_.size(); ++l) {
    next.push_back(cells_[l].step(in, prev[l]));
    in = next.back().h;
  }
  return next;
}

std::vector<LstmState> LstmStack::zero_state() const {
  std::vector<LstmState> s;
  for (const auto& c : cells_) s.push_back(c.zero_state());
  return s;
}

std::size_t LstmStack::parameter_count(std::size_t input, std::size_t hidden, std::size_t layers) {
  std::size_t n = LstmCell::parameter_count(input, hidden);
  for (std::size_t l = 1; l < layers; ++l) n += LstmCell::parameter_count(hidden, hidden);
  return n;
}

// ---- bidirectional encoder ---------------------------------------------------

BiLstmEncoder::BiLstmEncoder(ParameterStore& store, const std::string& name, std::size_t input, std::size_t hidden,
                             std::size_t layers, Rng& rng)
    : hidden_(hidden) {
  if (layers == 0) throw InputError("encoder needs at least one layer");
  for (std::size_t l = 0; l < layers; ++l) {
    const std::size_t in = l == 0 ? input : 2 * hidden;
    forward_.emplace_back(store, name + ".l" + std::to_string(l) + ".fwd", in, hidden, rng);
    backward_.emplace_back(store, name + ".l" + std::to_string(l) + ".bwd", in, hidden, rng);
  }
}

EncoderOutput BiLstmEncoder::encode(const std::vector<Tensor>& embeddings) const {
  if (embeddings.empty()) throw InputError("encode_bidirectional: empty input sequence");
  const std::size_t n = embeddings.size();
  std::vector<Tensor> inputs = embeddings;
  std::vector<Tensor> fwd(n), bwd(n);
  for (std::size_t l = 0; l < forward_.size(); ++l) {
    LstmState s = forward_[l].zero_state();
    for (std::size_t t = 0; t < n; ++t) {
      s = forward_[l].step(inputs[t], s);
      fwd[t] = s.h;
    }
    s = backward_[l].zero_state();
    for (std::size_t t = n; t-- > 0;) {
      s = backward_[l].step(inputs[t], s);
      bwd[t] = s.h;
    }
    for (std::size_t t = 0; t < n; ++t) inputs[t] = ad::concat({fwd[t], bwd[t]});
  }
  EncoderOutput out;
  out.states = std::move(inputs);
  out.matrix = ad::stack_rows(out.states);
  out.forward_final = fwd[n - 1];
  out.backward_first = bwd[0];
  return out;
}

std::size_t BiLstmEncoder::parameter_count(std::size_t input, std::size_t hidden, std::size_t layers) {
  std::size_t n = 2 * LstmCell::parameter_count(input, hidden);
  for (std::size_t l = 1; l < layers; ++l) n += 2 * LstmCell::parameter_count(2 * hidden, hidden);
  return n;
}

// ---- attentional decoder -------------------------------------------------------

AttentionDecoder::AttentionDecoder(ParameterStore& store, const std::string& name, const DecoderConfig& config,
                                   Tensor embeddings, Rng& rng)
    : config_(config), embeddings_(std::move(embeddings)) {
  if (embeddings_.rank() != 2 || embeddings_.dim(0) != config.vocab_size || embeddings_.dim(1) != config.embedding_dim)
    throw DimensionError("decoder: embedding matrix " + ad::shape_str(embeddings_.shape()) +
                         " does not match vocab " + std::to_string(config.vocab_size) + " x " +
                         std::to_string(config.embedding_dim));
  const std::size_t e = config.embedding_dim, s = config.encoder_output, h = config.hidden;
  auto fan = [](std::size_t n) { return 1.0 / std::sqrt(static_cast<double>(n)); };
  rnn_ = LstmStack(store, name + ".rnn", e + s + 1, h, config.layers, rng);
  w_a_ = init_uniform(store, name + ".attn.w_a", {s, h}, fan(h), rng);
  ln_gain_ = init_constant(store, name + ".attn.ln_gain", {s}, 1.0);
  ln_bias_ = init_constant(store, name + ".attn.ln_bias", {s}, 0.0);
  w_o_ = init_uniform(store, name + ".out.w_o", {e, s + h}, fan(s + h), rng);
  b_o_ = init_constant(store, name + ".out.b_o", {e}, 0.0);
  b_v_ = init_constant(store, name + ".out.b_v", {config.vocab_size}, 0.0);
  w_d_ = init_constant(store, name + ".countdown.w_d", {1}, config.countdown_init);
  w_c_ = init_uniform(store, name + ".init.w_c", {h, s + 2}, fan(s + 2), rng);
  w_v_ = init_constant(store, name + ".init.w_v", {1}, config.length_scale_init);
  if (config.learned_temperature) w_tau_ = init_uniform(store, name + ".tau.w", {h}, fan(h), rng);
}

std::size_t AttentionDecoder::parameter_count(const DecoderConfig& c) {
  const std::size_t e = c.embedding_dim, s = c.encoder_output, h = c.hidden;
  std::size_t n = LstmStack::parameter_count(e + s + 1, h, c.layers);
  n += s * h;            // W_a
  n += 2 * s;            // layer norm gain, bias
  n += e * (s + h) + e;  // W_o, b_o
  n += c.vocab_size;     // b_v
  n += 1;                // w_d
  n += h * (s + 2) + 1;  // W_c, w_v
  if (c.learned_temperature) n += h;
  return n;
}

DecoderState AttentionDecoder::init(const EncoderOutput& encoder, std::size_t target_length,
                                    std::size_t source_length) const {
  if (target_length == 0 || source_length == 0)
    throw InputError("init_decoder: lengths must be positive (target " + std::to_string(target_length) +
                     ", source " + std::to_string(source_length) + ")");
  const double target = static_cast<double>(target_length);
  Tensor features = ad::concat({encoder.forward_final, encoder.backward_first, ad::scale(w_v_, target),
                                Tensor::scalar(target / static_cast<double>(source_length))});
  DecoderState state;
  state.layers = rnn_.zero_state();
  state.layers[0].h = ad::tanh(ad::matvec(w_c_, features));
  state.context = Tensor::zeros({config_.encoder_output});
  return state;
}

Attention AttentionDecoder::attend(const EncoderOutput& encoder, const Tensor& hidden) const {
  Tensor scores = ad::matvec(encoder.matrix, ad::matvec(w_a_, hidden));
  Tensor weights = ad::softmax(scores);
  return {weights, ad::matvec_t(encoder.matrix, weights)};
}

DecoderStep AttentionDecoder::step(const EncoderOutput& encoder, const DecoderState& state, const Tensor& input,
                                   double countdown) const {
  if (input.size() != config_.embedding_dim)
    throw DimensionError("decoder_step: input embedding of size " + std::to_string(input.size()));
  Tensor rnn_in = ad::concat({input, state.context, ad::scale(w_d_, countdown)});
  DecoderStep out;
  out.state.layers = rnn_.step(rnn_in, state.layers);
  out.state.step = state.step + 1;
  out.hidden = out.state.layers.back().h;
  out.attention = attend(encoder, out.hidden);
  Tensor context = ad::layer_norm(out.attention.context, ln_gain_, ln_bias_);
  out.state.context = context;
  Tensor combined = ad::tanh(ad::add(ad::matvec(w_o_, ad::concat({context, out.hidden})), b_o_));
  out.logits = ad::add(ad::matvec(embeddings_, combined), b_v_);
  return out;
}

}  // namespace seq3
