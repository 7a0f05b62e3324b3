#include <cmath>
#include <map>

#include "doctest.h"
#include "reference_math.hpp"
#include "seq3/errors.hpp"
#include "seq3/sampling.hpp"
#include "test_util.hpp"

using namespace seq3;
using ad::Tensor;
using seq3::testing::random_const;
using seq3::testing::random_param;

TEST_CASE("soft-argmax of uniform logits is the mean embedding row") {
  Rng rng(1);
  auto e = random_const(rng, {4, 3});
  auto out = soft_argmax_embedding(Tensor::constant({0.7, 0.7, 0.7, 0.7}), 0.5, e);
  for (std::size_t j = 0; j < 3; ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < 4; ++i) mean += e[i * 3 + j] / 4.0;
    CHECK(out[j] == doctest::Approx(mean).epsilon(1e-14));
  }
  CHECK_THROWS_AS(soft_argmax_embedding(Tensor::constant({1.0}), 0.0, Tensor::zeros({1, 3})), InputError);
}

TEST_CASE("peaked soft-argmax approaches the argmax row") {
  Rng rng(2);
  auto e = random_const(rng, {3, 2});
  auto w = ad::softmax(Tensor::constant({10.0, 0.0, 0.0}), 0.1);
  CHECK(w[0] > 1.0 - 1e-9);
  auto out = soft_argmax_embedding(Tensor::constant({10.0, 0.0, 0.0}), 0.1, e);
  CHECK(out[0] == doctest::Approx(e[0]).epsilon(1e-9));
  CHECK(out[1] == doctest::Approx(e[1]).epsilon(1e-9));
}

TEST_CASE("argmax weight does not decrease as the temperature drops") {
  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    ref::Vec u = seq3::testing::random_values(rng, 6, -3.0, 3.0);
    const std::size_t best = argmax(u);
    double previous = 0.0;
    for (double tau : {1.0, 0.5, 0.1, 0.01}) {
      const double w = ref::softmax(u, tau)[best];
      CHECK(w >= previous);
      CHECK(ad::softmax(Tensor::constant(u), tau)[best] == doctest::Approx(w).epsilon(1e-12));
      previous = w;
    }
  }
}

TEST_CASE("gumbel noise") {
  CHECK(gumbel_from_uniform(std::exp(-1.0)) == doctest::Approx(0.0).epsilon(1e-15));
  const double top = gumbel_from_uniform(1.0);
  CHECK(std::isfinite(top));
  CHECK(top > 20.0);
  CHECK(std::isfinite(gumbel_from_uniform(0.0)));

  Rng rng(4);
  const std::size_t n = 1000000;
  auto xi = gumbel_noise(n, rng);
  double mean = 0.0;
  for (double v : xi) mean += v;
  mean /= static_cast<double>(n);
  CHECK(std::abs(mean - 0.5772156649) < 0.01);
}

TEST_CASE("zero noise reduces gumbel-softmax to soft-argmax") {
  Rng rng(5);
  auto e = random_const(rng, {5, 3});
  auto u = random_const(rng, {5});
  auto gs = gumbel_softmax_embedding(u, 0.5, e, std::vector<double>(5, 0.0));
  auto sa = soft_argmax_embedding(u, 0.5, e);
  for (std::size_t j = 0; j < 3; ++j) CHECK(gs.embedding[j] == sa[j]);
}

TEST_CASE("argmax of noised logits samples from the softmax") {
  Rng rng(6);
  const std::vector<double> u = {1.0, 0.5, -0.3, 2.0, 0.0};
  const auto p = ref::softmax(u);
  std::vector<double> freq(5, 0.0);
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) {
    auto xi = gumbel_noise(5, rng);
    std::vector<double> v(5);
    for (int k = 0; k < 5; ++k) v[k] = u[k] + xi[k];
    freq[argmax(v)] += 1.0 / draws;
  }
  for (int k = 0; k < 5; ++k) CHECK(std::abs(freq[k] - p[k]) < 0.01);
}

TEST_CASE("relaxed weights always form a distribution") {
  Rng rng(7);
  auto e = random_const(rng, {9, 2});
  for (int i = 0; i < 100; ++i) {
    auto word = gumbel_softmax_embedding(random_const(rng, {9}, -5.0, 5.0), 0.5, e, rng);
    double total = 0.0;
    for (double w : word.weights.values()) {
      CHECK(w >= 0.0);
      total += w;
    }
    CHECK(std::abs(total - 1.0) < 1e-9);
  }
}

TEST_CASE("straight-through: exact rows forward, relaxed gradient backward") {
  Rng rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    auto e = random_param(rng, {6, 4});
    auto u = random_param(rng, {6}, -2.0, 2.0);
    auto probe = random_const(rng, {4});
    auto noise = gumbel_noise(6, rng);

    auto st = straight_through_embedding(u, 0.5, e, noise);
    std::vector<double> v(6);
    for (int k = 0; k < 6; ++k) v[k] = u[k] + noise[k];
    REQUIRE(st.id == argmax(v));
    for (std::size_t j = 0; j < 4; ++j) CHECK(st.embedding[j] == e[st.id * 4 + j]);
    ad::backward(ad::dot(st.embedding, probe));
    std::vector<double> gu(u.grad().begin(), u.grad().end());
    std::vector<double> ge(e.grad().begin(), e.grad().end());
    u.clear_grad();
    e.clear_grad();

    auto gs = gumbel_softmax_embedding(u, 0.5, e, noise);
    ad::backward(ad::dot(gs.embedding, probe));
    for (std::size_t i = 0; i < gu.size(); ++i) CHECK(u.grad()[i] == gu[i]);
    for (std::size_t i = 0; i < ge.size(); ++i) CHECK(e.grad()[i] == ge[i]);
  }
}

TEST_CASE("greedy embedding") {
  Rng rng(9);
  auto e = random_param(rng, {4, 2});
  auto u = random_param(rng, {4});
  auto g = greedy_embedding(u, e);
  CHECK(g.id == argmax(u.values()));
  for (std::size_t j = 0; j < 2; ++j) CHECK(g.embedding[j] == e[g.id * 2 + j]);
  CHECK_FALSE(g.embedding.requires_grad());
  CHECK(g.noise.empty());
}

TEST_CASE("gumbel-softmax gradient passes finite differences with frozen noise") {
  Rng rng(10);
  auto e = random_const(rng, {5, 3});
  auto probe = random_const(rng, {3});
  for (int trial = 0; trial < 20; ++trial) {
    auto u = random_param(rng, {5});
    auto noise = gumbel_noise(5, rng);
    auto f = [&](const Tensor& x) { return ad::dot(gumbel_softmax_embedding(x, 0.5, e, noise).embedding, probe); };
    CHECK(ad::grad_check(f, u, 1e-5) < 1e-4);
  }
}

TEST_CASE("target length sampling") {
  Rng rng(11);
  for (int i = 0; i < 10000; ++i) {
    const auto m = sample_target_length(20, 0.4, 0.6, rng);
    CHECK(m >= 8);
    CHECK(m <= 12);
    CHECK(sample_target_length(8, 0.4, 0.6, rng) == 5);
  }
  CHECK(inference_target_length(20) == 10);
  CHECK(inference_target_length(8) == 5);
  CHECK(inference_target_length(9, 1.0) == 9);
  CHECK(inference_target_length(3, 1.0) == 5);
  CHECK_THROWS_AS(sample_target_length(0, 0.4, 0.6, rng), InputError);
}

TEST_CASE("learned temperature") {
  auto h = Tensor::constant({1.0, -2.0});
  auto w = Tensor::parameter({0.0, 0.0}, {2});
  CHECK(learned_temperature(h, w, 0.5).item() == doctest::Approx(1.0 / (std::log(2.0) + 0.5)));
  auto w_neg = Tensor::constant({-400.0, 200.0});
  CHECK(learned_temperature(h, w_neg, 2.0).item() == doctest::Approx(0.5));
  Rng rng(12);
  for (int i = 0; i < 100; ++i) {
    auto t = learned_temperature(random_const(rng, {2}, -2, 2), random_const(rng, {2}, -2, 2), 1.5);
    CHECK(t.item() > 0.0);
    CHECK(t.item() < 1.0 / 1.5);
  }
  auto hw = random_param(rng, {2});
  CHECK(ad::grad_check([&](const Tensor& x) { return learned_temperature(h, x, 1.0); }, hw) < 1e-4);

  // Tensor-temperature sampling agrees with the scalar path at equal tau.
  auto e = random_const(rng, {4, 2});
  auto u = random_const(rng, {4});
  auto noise = gumbel_noise(4, rng);
  auto a = gumbel_softmax_embedding(u, 0.7, e, noise);
  auto b = gumbel_softmax_embedding(u, Tensor::scalar(0.7), e, noise);
  for (std::size_t j = 0; j < 2; ++j) CHECK(a.embedding[j] == doctest::Approx(b.embedding[j]).epsilon(1e-14));
}

TEST_CASE("sampling config validation") {
  SamplingConfig c;
  CHECK_NOTHROW(c.validate());
  c.tau = 0.0;
  CHECK_THROWS_AS(c.validate(), InputError);
  c = {};
  c.alpha = 0.7;
  CHECK_THROWS_AS(c.validate(), InputError);
  CHECK(parse_sampling_mode("gumbel-st") == SamplingMode::GumbelST);
  CHECK_THROWS_AS(parse_sampling_mode("beam"), InputError);
}
