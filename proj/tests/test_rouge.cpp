#include <algorithm>
#include <string>
#include <vector>

#include "doctest.h"
#include "seq3/errors.hpp"
#include "seq3/rng.hpp"
#include "seq3/rouge.hpp"
#include "rouge_oracle.hpp"

using namespace seq3;
using namespace seq3::oracle;

namespace {

Sentence words(const std::string& text) {
  Sentence out;
  std::string cur;
  for (char c : text) {
    if (c == ' ') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

Sentence random_tokens(Rng& rng, std::size_t max_len) {
  static const Sentence pool = {"a", "b", "c", "d", "e"};
  Sentence out(rng.below(max_len + 1));
  for (auto& t : out) t = pool[rng.below(pool.size())];
  return out;
}

}  // namespace

TEST_CASE("porter stemmer matches published examples") {
  const std::vector<std::pair<std::string, std::string>> cases = {
      {"caresses", "caress"}, {"ponies", "poni"},     {"ties", "ti"},          {"caress", "caress"},
      {"cats", "cat"},        {"feed", "feed"},       {"agreed", "agre"},      {"plastered", "plaster"},
      {"bled", "bled"},       {"motoring", "motor"},  {"sing", "sing"},        {"conflated", "conflat"},
      {"troubled", "troubl"}, {"sized", "size"},      {"hopping", "hop"},      {"tanned", "tan"},
      {"falling", "fall"},    {"hissing", "hiss"},    {"fizzed", "fizz"},      {"failing", "fail"},
      {"filing", "file"},     {"happy", "happi"},     {"sky", "sky"},          {"relational", "relat"},
      {"conditional", "condit"}, {"rational", "ration"}, {"digitizer", "digit"}, {"operator", "oper"},
      {"feudalism", "feudal"}, {"hopefulness", "hope"}, {"callousness", "callous"}, {"triplicate", "triplic"},
      {"formative", "form"},  {"electrical", "electr"}, {"hopeful", "hope"},   {"goodness", "good"},
      {"revival", "reviv"},   {"allowance", "allow"}, {"inference", "infer"},  {"airliner", "airlin"},
      {"adjustable", "adjust"}, {"defensible", "defens"}, {"irritant", "irrit"}, {"replacement", "replac"},
      {"adjustment", "adjust"}, {"dependent", "depend"}, {"adoption", "adopt"}, {"communism", "commun"},
      {"activate", "activ"},  {"effective", "effect"}, {"probate", "probat"},  {"rate", "rate"},
      {"cease", "ceas"},      {"controll", "control"}, {"roll", "roll"},       {"generalization", "gener"}};
  for (const auto& [in, out] : cases) {
    INFO(in);
    CHECK(porter_stem(in) == out);
  }
  CHECK(porter_stem("Running") == "run");
  CHECK(porter_stem("is") == "is");
  CHECK(porter_stem("t17") == "t17");
  CHECK(porter_stem("") == "");
}

TEST_CASE("rouge examples") {
  const PRF r1 = rouge_n(words("the cat sat"), {words("the cat")}, 1);
  CHECK(r1.precision == doctest::Approx(2.0 / 3).epsilon(1e-15));
  CHECK(r1.recall == 1.0);
  CHECK(r1.f1 == doctest::Approx(0.8).epsilon(1e-15));

  const Sentence s = words("police arrest two men after robbery");
  for (int n : {1, 2}) {
    const PRF same = rouge_n(s, {s}, n);
    CHECK(same.precision == 1.0);
    CHECK(same.recall == 1.0);
    CHECK(same.f1 == 1.0);
  }
  const PRF none = rouge_n(words("x y"), {words("p q")}, 1);
  CHECK(none.precision == 0.0);
  CHECK(none.f1 == 0.0);

  const PRF l = rouge_l(words("a b c d"), {words("a c d")});
  CHECK(l.precision == 0.75);
  CHECK(l.recall == 1.0);
  CHECK(l.f1 == doctest::Approx(6.0 / 7).epsilon(1e-15));
  CHECK(rouge_l(s, {s}).f1 == 1.0);
  CHECK(lcs_length(words("a b c d"), words("d c b a")) == 1);

  const PRF empty = rouge_n({}, {words("a b")}, 1);
  CHECK(empty.precision == 0.0);
  CHECK(empty.recall == 0.0);
  CHECK(empty.f1 == 0.0);
  CHECK(rouge_l({}, {words("a b")}).f1 == 0.0);
  CHECK_THROWS_AS(rouge_n(s, {s}, 3), InputError);
  CHECK_THROWS_AS(rouge_l(s, {}), InputError);
}

TEST_CASE("stemming merges inflections") {
  CHECK(rouge_n(words("ponies running"), {words("pony runs")}, 1, false).f1 == 0.0);
  CHECK(rouge_n(words("cats running"), {words("cat run")}, 1, true).f1 == 1.0);
}

TEST_CASE("multi-reference takes the best F1 with its P and R") {
  const PRF s = rouge_n(words("a b c"), {words("x y"), words("a b"), words("a z z z")}, 1);
  CHECK(s.precision == doctest::Approx(2.0 / 3));
  CHECK(s.recall == 1.0);
}

TEST_CASE("rouge agrees with brute-force oracles on random pairs") {
  Rng rng(7);
  for (int trial = 0; trial < 1000; ++trial) {
    const Sentence c = random_tokens(rng, 8), r = random_tokens(rng, 8);
    for (std::size_t n : {1u, 2u}) {
      double ct = 0, rt = 0;
      const double overlap = brute_overlap(c, r, n, ct, rt);
      const PRF s = rouge_n(c, {r}, static_cast<int>(n), false);
      REQUIRE(s.precision == (ct > 0 ? overlap / ct : 0.0));
      REQUIRE(s.recall == (rt > 0 ? overlap / rt : 0.0));
      REQUIRE(s.f1 == oracle_f1(overlap, ct, rt));
    }
    const std::size_t lcs = brute_lcs(c, r);
    REQUIRE(lcs_length(c, r) == lcs);
    const PRF l = rouge_l(c, {r}, false);
    REQUIRE(l.f1 == oracle_f1(static_cast<double>(lcs), static_cast<double>(c.size()),
                              static_cast<double>(r.size())));
  }
}

TEST_CASE("score bounds, zero iff no overlap, monotone in references") {
  Rng rng(11);
  for (int trial = 0; trial < 500; ++trial) {
    const Sentence c = random_tokens(rng, 7);
    std::vector<Sentence> refs = {random_tokens(rng, 7)};
    for (int n : {1, 2}) {
      const PRF s = rouge_n(c, refs, n, false);
      for (double v : {s.precision, s.recall, s.f1}) {
        REQUIRE(v >= 0.0);
        REQUIRE(v <= 1.0);
      }
      REQUIRE(s.f1 <= std::max(s.precision, s.recall) + 1e-15);
      REQUIRE((s.f1 == 0.0) == (s.precision == 0.0));
    }
    const PRF l = rouge_l(c, refs, false);
    REQUIRE((l.f1 == 0.0) == (lcs_length(c, refs[0]) == 0));
    const double before = rouge_n(c, refs, 1, false).f1, before_l = l.f1;
    refs.push_back(random_tokens(rng, 7));
    REQUIRE(rouge_n(c, refs, 1, false).f1 >= before);
    REQUIRE(rouge_l(c, refs, false).f1 >= before_l);
    if (!c.empty()) REQUIRE(rouge_n(c, {c}, 1, false).f1 == 1.0);
  }
}

TEST_CASE("evaluate_set averages and filters") {
  const EvalExample one{{}, words("the cat sat"), {words("the cat")}};
  const EvalReport single = evaluate_set({one});
  CHECK(single.mean.r1.f1 == single.per_example[0].r1.f1);
  CHECK(single.mean.rl.recall == single.per_example[0].rl.recall);

  // R1 F1 of 0.2 (P=R=0.2) and 0.4 (P=R=0.4)
  const EvalExample a{{}, words("a b c d e"), {words("a x y z w")}};
  const EvalExample b{{}, words("a b c d e"), {words("a b x y z")}};
  const EvalExample empty{{}, words("a"), {Sentence{}}};
  const EvalReport two = evaluate_set({a, empty, b});
  CHECK(two.mean.r1.f1 == doctest::Approx(0.3).epsilon(1e-15));
  CHECK(two.filtered == 1);
  CHECK(two.kept == std::vector<std::size_t>{0, 2});
  CHECK_THROWS_AS(evaluate_set({empty}), InputError);
  CHECK_THROWS_AS(evaluate_set({}), InputError);
}

TEST_CASE("lead and prefix baselines") {
  const Sentence ten = words("w1 w2 w3 w4 w5 w6 w7 w8 w9 w10");
  CHECK(lead_n_baseline(ten) == Sentence(ten.begin(), ten.begin() + 8));
  CHECK(lead_n_baseline(words("a b c d e")).size() == 5);
  CHECK(lead_n_baseline(ten, 0).empty());

  const Sentence short_one = words("this sentence is exactly forty bytes ok!");
  CHECK(prefix_baseline(short_one) == short_one);
  const Sentence tens(8, std::string(10, 'x'));
  CHECK(prefix_baseline(tens).size() == 6);
  bool warned = false;
  CHECK(prefix_baseline({std::string(80, 'y'), "z"}, 75, &warned).empty());
  CHECK(warned);
  // never splits a multibyte character: whole tokens only
  const Sentence utf = {std::string(71, 'a'), "\xc3\xa9\xc3\xa9"};
  CHECK(prefix_baseline(utf).size() == 1);
}
