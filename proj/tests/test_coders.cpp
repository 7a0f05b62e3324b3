#include <cmath>

#include "doctest.h"
#include "reference_math.hpp"
#include "seq3/coders.hpp"
#include "seq3/errors.hpp"
#include "test_util.hpp"

using namespace seq3;
using ad::Tensor;
using seq3::testing::random_const;

namespace {

std::vector<Tensor> random_sequence(Rng& rng, std::size_t n, std::size_t d) {
  std::vector<Tensor> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(random_const(rng, {d}));
  return out;
}

void fill(ParameterStore& store, double value) {
  for (auto& [name, t] : store.items()) {
    Tensor h = t;
    for (double& v : h.mutable_values()) v = value;
  }
}

struct DecoderFixture {
  ParameterStore store;
  Tensor embeddings;
  BiLstmEncoder encoder;
  AttentionDecoder decoder;
  DecoderConfig config;

  DecoderFixture(std::size_t emb, std::size_t enc_hidden, std::size_t dec_hidden, std::size_t layers,
                 std::size_t vocab, std::uint64_t seed) {
    Rng rng(seed);
    embeddings = init_uniform(store, "embedding", {vocab, emb}, 0.5, rng);
    encoder = BiLstmEncoder(store, "encoder", emb, enc_hidden, layers, rng);
    config.embedding_dim = emb;
    config.encoder_output = 2 * enc_hidden;
    config.hidden = dec_hidden;
    config.layers = layers;
    config.vocab_size = vocab;
    decoder = AttentionDecoder(store, "decoder", config, embeddings, rng);
    // Nonzero biases and a nontrivial layer norm so the oracle exercises them.
    for (auto& [name, t] : store.items()) {
      if (name.find("ln_") == std::string::npos && name.find(".b_") == std::string::npos) continue;
      Tensor h = t;
      for (double& v : h.mutable_values()) v += rng.uniform(-0.3, 0.3);
    }
  }
};

}  // namespace

TEST_CASE("encoder shapes") {
  ParameterStore store;
  Rng rng(1);
  BiLstmEncoder enc(store, "enc", 4, 3, 2, rng);
  auto out = enc.encode(random_sequence(rng, 1, 4));
  REQUIRE(out.states.size() == 1);
  CHECK(out.states[0].size() == 6);
  CHECK(out.matrix.shape() == ad::Shape{1, 6});
  CHECK_THROWS_AS(enc.encode({}), InputError);

  ParameterStore full;
  BiLstmEncoder full_sized(full, "enc", 100, 300, 2, rng);
  CHECK(full_sized.encode(random_sequence(rng, 1, 100)).states[0].size() == 600);
  CHECK(full.element_count() == BiLstmEncoder::parameter_count(100, 300, 2));
}

TEST_CASE("encoder with zero weights and zero inputs yields zero states") {
  ParameterStore store;
  Rng rng(2);
  BiLstmEncoder enc(store, "enc", 3, 4, 2, rng);
  fill(store, 0.0);
  std::vector<Tensor> xs(5, Tensor::zeros({3}));
  for (const auto& s : enc.encode(xs).states)
    for (double v : s.values()) CHECK(v == 0.0);
}

TEST_CASE("reversing the input mirrors the states when direction weights are swapped") {
  ParameterStore a_store, b_store;
  Rng rng(3);
  BiLstmEncoder a(a_store, "enc", 3, 4, 1, rng);
  BiLstmEncoder b(b_store, "enc", 3, 4, 1, rng);
  for (const char* part : {".w", ".b"}) {
    auto src_f = a_store.get(std::string("enc.l0.fwd") + part).values();
    auto src_b = a_store.get(std::string("enc.l0.bwd") + part).values();
    Tensor dst_f = b_store.get(std::string("enc.l0.fwd") + part);
    Tensor dst_b = b_store.get(std::string("enc.l0.bwd") + part);
    std::copy(src_b.begin(), src_b.end(), dst_f.mutable_values().begin());
    std::copy(src_f.begin(), src_f.end(), dst_b.mutable_values().begin());
  }
  auto xs = random_sequence(rng, 6, 3);
  auto rev = std::vector<Tensor>(xs.rbegin(), xs.rend());
  auto out_a = a.encode(xs);
  auto out_b = b.encode(rev);
  const std::size_t n = xs.size();
  for (std::size_t t = 0; t < n; ++t)
    for (std::size_t i = 0; i < 4; ++i) {
      CHECK(out_a.states[t][i] == doctest::Approx(out_b.states[n - 1 - t][4 + i]).epsilon(1e-12));
      CHECK(out_a.states[t][4 + i] == doctest::Approx(out_b.states[n - 1 - t][i]).epsilon(1e-12));
    }
}

TEST_CASE("encoder matches the straight-line oracle") {
  ParameterStore store;
  Rng rng(4);
  BiLstmEncoder enc(store, "enc", 3, 2, 2, rng);
  auto xs = random_sequence(rng, 4, 3);
  std::vector<ref::Vec> plain;
  for (auto& x : xs) plain.emplace_back(x.values().begin(), x.values().end());
  auto expected = ref::encode(store, "enc", plain, 2, 2);
  auto got = enc.encode(xs);
  for (std::size_t t = 0; t < 4; ++t)
    for (std::size_t i = 0; i < 4; ++i) CHECK(got.states[t][i] == doctest::Approx(expected.states[t][i]).epsilon(1e-13));
}

TEST_CASE("attention") {
  DecoderFixture f(3, 2, 4, 2, 7, 5);
  Rng rng(6);
  auto enc1 = f.encoder.encode(random_sequence(rng, 1, 3));
  auto h = random_const(rng, {4});
  auto single = f.decoder.attend(enc1, h);
  CHECK(single.weights[0] == 1.0);
  for (std::size_t i = 0; i < 4; ++i) CHECK(single.context[i] == doctest::Approx(enc1.states[0][i]));

  auto x = random_const(rng, {3});
  auto same = f.encoder.encode({x, x, x});
  // A constant sequence still produces position-dependent LSTM states, so
  // build identical states directly.
  EncoderOutput identical;
  identical.states = {same.states[0], same.states[0], same.states[0]};
  identical.matrix = ad::stack_rows(identical.states);
  auto uni = f.decoder.attend(identical, h);
  for (std::size_t i = 0; i < 3; ++i) CHECK(uni.weights[i] == doctest::Approx(1.0 / 3.0));
  for (std::size_t i = 0; i < 4; ++i) CHECK(uni.context[i] == doctest::Approx(same.states[0][i]));

  auto enc3 = f.encoder.encode(random_sequence(rng, 3, 3));
  auto att = f.decoder.attend(enc3, h);
  const ref::Mat wa = ref::mat(f.store, "decoder.attn.w_a");
  const ref::Vec q = ref::mv(wa, ref::Vec(h.values().begin(), h.values().end()));
  ref::Vec scores;
  for (const auto& s : enc3.states) {
    double v = 0.0;
    for (std::size_t i = 0; i < 4; ++i) v += s[i] * q[i];
    scores.push_back(v);
  }
  auto a = ref::softmax(scores);
  for (std::size_t i = 0; i < 4; ++i) {
    double c = 0.0;
    for (std::size_t t = 0; t < 3; ++t) c += a[t] * enc3.states[t][i];
    CHECK(att.context[i] == doctest::Approx(c).epsilon(1e-13));
  }
}

TEST_CASE("attention weights form a distribution at every step") {
  DecoderFixture f(3, 2, 4, 2, 7, 7);
  Rng rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    auto enc = f.encoder.encode(random_sequence(rng, 1 + rng.below(8), 3));
    auto state = f.decoder.init(enc, 5, enc.states.size());
    for (int t = 0; t < 6; ++t) {
      auto out = f.decoder.step(enc, state, random_const(rng, {3}), 5 - t);
      double total = 0.0;
      for (double w : out.attention.weights.values()) {
        CHECK(w >= 0.0);
        total += w;
      }
      CHECK(std::abs(total - 1.0) < 1e-9);
      state = out.state;
    }
  }
}

TEST_CASE("decoder step shapes and countdown") {
  DecoderFixture f(3, 2, 4, 2, 9, 9);
  Rng rng(10);
  auto enc = f.encoder.encode(random_sequence(rng, 5, 3));
  auto state = f.decoder.init(enc, 3, 5);
  auto in = random_const(rng, {3});
  auto a = f.decoder.step(enc, state, in, 3);
  CHECK(a.logits.size() == 9);
  auto b = f.decoder.step(enc, state, in, 1);
  bool differs = false;
  for (std::size_t i = 0; i < 9; ++i) differs |= a.logits[i] != b.logits[i];
  CHECK(differs);

  Tensor wd = f.decoder.countdown_weight();
  wd.mutable_values()[0] = 0.0;
  auto c = f.decoder.step(enc, state, in, 3);
  auto d = f.decoder.step(enc, state, in, 11);
  for (std::size_t i = 0; i < 9; ++i) CHECK(c.logits[i] == d.logits[i]);
  CHECK_THROWS_AS(f.decoder.step(enc, state, random_const(rng, {4}), 1), DimensionError);
}

TEST_CASE("decoder step matches hand evaluation at dimension 2") {
  DecoderFixture f(2, 1, 2, 1, 5, 11);
  Rng rng(12);
  auto xs = random_sequence(rng, 2, 2);
  auto enc = f.encoder.encode(xs);
  std::vector<ref::Vec> plain;
  for (auto& x : xs) plain.emplace_back(x.values().begin(), x.values().end());
  auto renc = ref::encode(f.store, "encoder", plain, 1, 1);
  auto rstate = ref::decoder_init(f.store, "decoder", renc, 1, 2, 3.0, 2.0);
  auto state = f.decoder.init(enc, 3, 2);
  const ref::Vec emb(f.embeddings.values().begin(), f.embeddings.values().end());
  for (int t = 0; t < 3; ++t) {
    auto in = random_const(rng, {2});
    auto out = f.decoder.step(enc, state, in, 3 - t);
    auto rout = ref::decoder_step(f.store, "decoder", emb, 5, renc, rstate, ref::Vec(in.values().begin(), in.values().end()),
                                  3 - t);
    for (std::size_t i = 0; i < 5; ++i) CHECK(out.logits[i] == doctest::Approx(rout.logits[i]).epsilon(1e-13));
    state = out.state;
    rstate = rout.state;
  }
}

TEST_CASE("decoder init") {
  DecoderFixture f(3, 2, 4, 2, 6, 13);
  Rng rng(14);
  auto enc = f.encoder.encode(random_sequence(rng, 10, 3));
  for (auto [m, n] : {std::pair{1, 1}, {5, 10}, {40, 3}}) {
    auto s = f.decoder.init(enc, m, n);
    CHECK(s.layers[0].h.size() == 4);
    CHECK(s.layers.size() == 2);
    for (double v : s.layers[1].h.values()) CHECK(v == 0.0);
    for (double v : s.layers[0].c.values()) CHECK(v == 0.0);
    for (double v : s.context.values()) CHECK(v == 0.0);
  }

  // Features are [fwd_N; bwd_1; 5 w_v; 0.5].
  auto s = f.decoder.init(enc, 5, 10);
  const double wv = f.decoder.length_weight()[0];
  ref::Vec feats(enc.forward_final.values().begin(), enc.forward_final.values().end());
  feats.insert(feats.end(), enc.backward_first.values().begin(), enc.backward_first.values().end());
  feats.push_back(5.0 * wv);
  feats.push_back(0.5);
  auto expected = ref::vtanh(ref::mv(ref::mat(f.store, "decoder.init.w_c"), feats));
  for (std::size_t i = 0; i < 4; ++i) CHECK(s.layers[0].h[i] == doctest::Approx(expected[i]).epsilon(1e-14));

  CHECK_THROWS_AS(f.decoder.init(enc, 0, 10), InputError);
  CHECK_THROWS_AS(f.decoder.init(enc, 3, 0), InputError);

  Tensor wc = f.store.get("decoder.init.w_c");
  for (double& v : wc.mutable_values()) v = 0.0;
  EncoderOutput zero_enc = enc;
  zero_enc.forward_final = Tensor::zeros({2});
  zero_enc.backward_first = Tensor::zeros({2});
  auto zero_state = f.decoder.init(zero_enc, 5, 10);
  for (double v : zero_state.layers[0].h.values()) CHECK(v == 0.0);
}

TEST_CASE("output projection is tied to the embedding matrix") {
  DecoderFixture f(3, 2, 4, 2, 8, 15);
  Rng rng(16);
  auto enc = f.encoder.encode(random_sequence(rng, 4, 3));
  auto state = f.decoder.init(enc, 3, 4);
  auto in = random_const(rng, {3});
  auto before = f.decoder.step(enc, state, in, 3);
  const std::size_t k = 5;
  f.embeddings.mutable_values()[k * 3 + 1] += 0.25;
  auto after = f.decoder.step(enc, state, in, 3);
  for (std::size_t i = 0; i < 8; ++i) {
    if (i == k)
      CHECK(after.logits[i] != before.logits[i]);
    else
      CHECK(after.logits[i] == before.logits[i]);
  }
}

TEST_CASE("decoder is deterministic and counts its parameters") {
  DecoderFixture f(3, 2, 4, 2, 8, 17);
  Rng rng(18);
  auto xs = random_sequence(rng, 4, 3);
  auto in = random_const(rng, {3});
  auto run = [&] {
    auto enc = f.encoder.encode(xs);
    return f.decoder.step(enc, f.decoder.init(enc, 3, 4), in, 3).logits;
  };
  auto a = run();
  auto b = run();
  for (std::size_t i = 0; i < 8; ++i) CHECK(a[i] == b[i]);
  CHECK(f.store.element_count() ==
        8 * 3 + BiLstmEncoder::parameter_count(3, 2, 2) + AttentionDecoder::parameter_count(f.config));
}
