#pragma once

#include <string>
#include <vector>

#include "seq3/params.hpp"
#include "seq3/rng.hpp"
#include "seq3/tensor.hpp"

namespace seq3 {

// Uniform(-range, range) trainable tensor registered under `name`.
ad::Tensor init_uniform(ParameterStore& store, const std::string& name, ad::Shape shape, double range, Rng& rng);
ad::Tensor init_constant(ParameterStore& store, const std::string& name, ad::Shape shape, double value);

struct LstmState {
  ad::Tensor h;
  ad::Tensor c;
};

// One layer, one direction. Gates are computed jointly as
// W [x; h] + b with row blocks (input, forget, candidate, output).
class LstmCell {
 public:
  LstmCell() = default;
  LstmCell(ParameterStore& store, const std::string& name, std::size_t input, std::size_t hidden, Rng& rng);

  LstmState step(const ad::Tensor& x, const LstmState& prev) const;
  LstmState zero_state() const;

  std::size_t input_size() const { return input_; }
  std::size_t hidden_size() const { return hidden_; }
  static std::size_t parameter_count(std::size_t input, std::size_t hidden) {
    return 4 * hidden * (input + hidden) + 4 * hidden;
  }

 private:
  std::size_t input_ = 0;
  std::size_t hidden_ = 0;
  ad::Tensor weight_;
  ad::Tensor bias_;
};

// Unidirectional multi-layer LSTM advanced one step at a time.
class LstmStack {
 public:
  LstmStack() = default;
  LstmStack(ParameterStore& store, const std::string& name, std::size_t input, std::size_t hidden,
            std::size_t layers, Rng& rng);

  std::vector<LstmState> step(const ad::Tensor& x, const std::vector<LstmState>& prev) const;
  std::vector<LstmState> zero_state() const;
  std::size_t layers() const { return cells_.size(); }
  std::size_t hidden_size() const { return cells_.front().hidden_size(); }

  static std::size_t parameter_count(std::size_t input, std::size_t hidden, std::size_t layers);

 private:
  std::vector<LstmCell> cells_;
};

struct EncoderOutput {
  std::vector<ad::Tensor> states;  // h^s_t = [fwd_t; bwd_t] of the top layer
  ad::Tensor matrix;               // states stacked as [N, 2H]
  ad::Tensor forward_final;        // top-layer fwd state at t = N
  ad::Tensor backward_first;       // top-layer bwd state at t = 1
};

// Multi-layer bidirectional LSTM; layer k+1 reads the concatenated outputs
// of layer k.
class BiLstmEncoder {
 public:
  BiLstmEncoder() = default;
  BiLstmEncoder(ParameterStore& store, const std::string& name, std::size_t input, std::size_t hidden,
                std::size_t layers, Rng& rng);

  EncoderOutput encode(const std::vector<ad::Tensor>& embeddings) const;

  std::size_t hidden_size() const { return hidden_; }
  std::size_t output_size() const { return 2 * hidden_; }
  static std::size_t parameter_count(std::size_t input, std::size_t hidden, std::size_t layers);

 private:
  std::size_t hidden_ = 0;
  std::vector<LstmCell> forward_;
  std::vector<LstmCell> backward_;
};

struct DecoderConfig {
  std::size_t embedding_dim = 100;
  std::size_t encoder_output = 600;  // 2 x encoder hidden
  std::size_t hidden = 300;
  std::size_t layers = 2;
  std::size_t vocab_size = 0;
  double countdown_init = 1.0;       // w_d
  double length_scale_init = 0.01;   // w_v
  bool learned_temperature = false;  // adds w_tau
};

struct DecoderState {
  std::vector<LstmState> layers;
  ad::Tensor context;  // previous (normalized) context, zero before step 1
  std::size_t step = 0;
};

struct Attention {
  ad::Tensor weights;  // distribution over source states
  ad::Tensor context;  // sum_i a_i h^s_i
};

struct DecoderStep {
  ad::Tensor logits;  // u_t over the vocabulary
  ad::Tensor hidden;  // top-layer h_t
  DecoderState state;
  Attention attention;
};

// Attentional LSTM decoder with global bilinear attention, input feeding,
// a countdown input feature, layer-normalized context and an output layer
// tied to the shared embedding matrix.
class AttentionDecoder {
 public:
  AttentionDecoder() = default;
  AttentionDecoder(ParameterStore& store, const std::string& name, const DecoderConfig& config,
                   ad::Tensor embeddings, Rng& rng);

  // tanh(W_c [fwd_N; bwd_1; w_v * target; target / source]) into the bottom
  // layer's hidden state; upper layers, cells and context start at zero.
  DecoderState init(const EncoderOutput& encoder, std::size_t target_length, std::size_t source_length) const;

  Attention attend(const EncoderOutput& encoder, const ad::Tensor& hidden) const;

  // Advances the recurrence on [input; previous context; w_d * countdown],
  // attends with the new state and projects to vocabulary logits.
  DecoderStep step(const EncoderOutput& encoder, const DecoderState& state, const ad::Tensor& input,
                   double countdown) const;

  // w_tau, defined only with learned_temperature.
  const ad::Tensor& temperature_weight() const { return w_tau_; }

  const DecoderConfig& config() const { return config_; }
  const ad::Tensor& countdown_weight() const { return w_d_; }
  const ad::Tensor& length_weight() const { return w_v_; }

  // Count of parameters owned by this decoder (the tied embedding excluded).
  static std::size_t parameter_count(const DecoderConfig& config);

 private:
  DecoderConfig config_;
  LstmStack rnn_;
  ad::Tensor embeddings_;
  ad::Tensor w_a_, ln_gain_, ln_bias_, w_o_, b_o_, b_v_, w_d_, w_c_, w_v_, w_tau_;
};

}  // namespace seq3
