#pragma once

// Straight-line double-precision evaluation of the model equations, used as
// an oracle independent of the autodiff graph.

#include <cmath>
#include <string>
#include <vector>

#include "seq3/params.hpp"

namespace seq3::ref {

using Vec = std::vector<double>;

struct Mat {
  std::size_t rows = 0, cols = 0;
  Vec v;
  double at(std::size_t i, std::size_t j) const { return v[i * cols + j]; }
};

inline Mat mat(const ParameterStore& store, const std::string& name) {
  const auto& t = store.get(name);
  Mat m;
  m.rows = t.dim(0);
  m.cols = t.rank() > 1 ? t.dim(1) : 1;
  m.v.assign(t.values().begin(), t.values().end());
  return m;
}

inline Vec vec(const ParameterStore& store, const std::string& name) {
  const auto& t = store.get(name);
  return Vec(t.values().begin(), t.values().end());
}

inline Vec mv(const Mat& m, const Vec& x) {
  Vec out(m.rows, 0.0);
  for (std::size_t i = 0; i < m.rows; ++i)
    for (std::size_t j = 0; j < m.cols; ++j) out[i] += m.at(i, j) * x[j];
  return out;
}

inline Vec cat(std::initializer_list<Vec> parts) {
  Vec out;
  for (const auto& p : parts) out.insert(out.end(), p.begin(), p.end());
  return out;
}

inline Vec plus(const Vec& a, const Vec& b) {
  Vec out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return out;
}

inline double sigm(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline Vec vtanh(Vec a) {
  for (double& x : a) x = std::tanh(x);
  return a;
}

inline Vec softmax(const Vec& u, double tau = 1.0) {
  double mx = u[0];
  for (double x : u) mx = std::max(mx, x);
  Vec out(u.size());
  double z = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) z += (out[i] = std::exp((u[i] - mx) / tau));
  for (double& x : out) x /= z;
  return out;
}

inline double log_sum_exp(const Vec& u) {
  double mx = u[0];
  for (double x : u) mx = std::max(mx, x);
  double z = 0.0;
  for (double x : u) z += std::exp(x - mx);
  return mx + std::log(z);
}

inline Vec layer_norm(const Vec& x, const Vec& g, const Vec& b) {
  double mean = 0.0, var = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(x.size());
  for (double v : x) var += (v - mean) * (v - mean);
  var /= static_cast<double>(x.size());
  Vec out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = g[i] * (x[i] - mean) / std::sqrt(var + 1e-5) + b[i];
  return out;
}

struct Lstm {
  Vec h, c;
};

inline Lstm lstm_cell(const ParameterStore& store, const std::string& name, const Vec& x, const Lstm& prev) {
  const Mat w = mat(store, name + ".w");
  const Vec b = vec(store, name + ".b");
  const std::size_t hs = prev.h.size();
  const Vec gates = plus(mv(w, cat({x, prev.h})), b);
  Lstm out{Vec(hs), Vec(hs)};
  for (std::size_t k = 0; k < hs; ++k) {
    const double i = sigm(gates[k]), f = sigm(gates[hs + k]), g = std::tanh(gates[2 * hs + k]),
                 o = sigm(gates[3 * hs + k]);
    out.c[k] = f * prev.c[k] + i * g;
    out.h[k] = o * std::tanh(out.c[k]);
  }
  return out;
}

struct Encoded {
  std::vector<Vec> states;
  Vec fwd_last, bwd_first;
};

inline Encoded encode(const ParameterStore& store, const std::string& name, std::vector<Vec> inputs,
                      std::size_t layers, std::size_t hidden) {
  const std::size_t n = inputs.size();
  std::vector<Vec> f(n), b(n);
  for (std::size_t l = 0; l < layers; ++l) {
    const std::string base = name + ".l" + std::to_string(l);
    Lstm s{Vec(hidden, 0.0), Vec(hidden, 0.0)};
    for (std::size_t t = 0; t < n; ++t) f[t] = (s = lstm_cell(store, base + ".fwd", inputs[t], s)).h;
    s = {Vec(hidden, 0.0), Vec(hidden, 0.0)};
    for (std::size_t t = n; t-- > 0;) b[t] = (s = lstm_cell(store, base + ".bwd", inputs[t], s)).h;
    for (std::size_t t = 0; t < n; ++t) inputs[t] = cat({f[t], b[t]});
  }
  return {inputs, f[n - 1], b[0]};
}

struct DecState {
  std::vector<Lstm> layers;
  Vec context;
};

inline DecState decoder_init(const ParameterStore& store, const std::string& name, const Encoded& enc,
                             std::size_t layers, std::size_t hidden, double target, double source) {
  const Vec wv = vec(store, name + ".init.w_v");
  const Vec feats = cat({enc.fwd_last, enc.bwd_first, Vec{wv[0] * target, target / source}});
  DecState s;
  for (std::size_t l = 0; l < layers; ++l) s.layers.push_back({Vec(hidden, 0.0), Vec(hidden, 0.0)});
  s.layers[0].h = vtanh(mv(mat(store, name + ".init.w_c"), feats));
  s.context = Vec(enc.states[0].size(), 0.0);
  return s;
}

struct DecOut {
  Vec logits, attention;
  DecState state;
};

inline DecOut decoder_step(const ParameterStore& store, const std::string& name, const Vec& embeddings_flat,
                           std::size_t vocab, const Encoded& enc, const DecState& state, const Vec& input,
                           double countdown) {
  const double wd = vec(store, name + ".countdown.w_d")[0];
  Vec x = cat({input, state.context, Vec{wd * countdown}});
  DecOut out;
  for (std::size_t l = 0; l < state.layers.size(); ++l) {
    out.state.layers.push_back(lstm_cell(store, name + ".rnn.l" + std::to_string(l), x, state.layers[l]));
    x = out.state.layers.back().h;
  }
  const Vec& h = out.state.layers.back().h;
  const Vec q = mv(mat(store, name + ".attn.w_a"), h);
  Vec scores;
  for (const auto& hs : enc.states) {
    double s = 0.0;
    for (std::size_t i = 0; i < hs.size(); ++i) s += hs[i] * q[i];
    scores.push_back(s);
  }
  out.attention = softmax(scores);
  Vec ctx(enc.states[0].size(), 0.0);
  for (std::size_t t = 0; t < enc.states.size(); ++t)
    for (std::size_t i = 0; i < ctx.size(); ++i) ctx[i] += out.attention[t] * enc.states[t][i];
  ctx = layer_norm(ctx, vec(store, name + ".attn.ln_gain"), vec(store, name + ".attn.ln_bias"));
  out.state.context = ctx;
  const Vec o = vtanh(plus(mv(mat(store, name + ".out.w_o"), cat({ctx, h})), vec(store, name + ".out.b_o")));
  Mat e{vocab, o.size(), embeddings_flat};
  out.logits = plus(mv(e, o), vec(store, name + ".out.b_v"));
  return out;
}

}  // namespace seq3::ref
