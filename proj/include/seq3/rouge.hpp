#pragma once
// ROUGE-1/2/L F1 scoring, set-level averaging and the extractive baselines.

#include <string>
#include <vector>

#include "seq3/vocab.hpp"

namespace seq3 {

// Porter (1980) suffix stripper. Input is lowercased first; tokens with
// non-letters are returned lowercased but otherwise unchanged.
std::string porter_stem(const std::string& word);

struct PRF {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// 2PR/(P+R), zero when P+R is zero.
double f1_score(double precision, double recall);

struct RougeScores {
  PRF r1, r2, rl;
};

// Clipped n-gram overlap, max F1 over references. n must be 1 or 2.
PRF rouge_n(const Sentence& candidate, const std::vector<Sentence>& references, int n, bool stem = true);
// Longest-common-subsequence P/R/F1, max F1 over references.
PRF rouge_l(const Sentence& candidate, const std::vector<Sentence>& references, bool stem = true);
RougeScores rouge_all(const Sentence& candidate, const std::vector<Sentence>& references, bool stem = true);

std::size_t lcs_length(const Sentence& a, const Sentence& b);

struct EvalExample {
  Sentence source;
  Sentence candidate;
  std::vector<Sentence> references;
};

struct EvalReport {
  RougeScores mean;
  std::vector<RougeScores> per_example;  // kept examples, in input order
  std::vector<std::size_t> kept;         // input index of each kept example
  std::size_t filtered = 0;              // examples dropped for empty references
};

// Drops empty references, then examples left with none; averages the rest.
// InputError if nothing remains.
EvalReport evaluate_set(const std::vector<EvalExample>& examples, bool stem = true);

// First min(n, N) tokens.
Sentence lead_n_baseline(const Sentence& source, std::size_t n = 8);

// Longest whole-token prefix whose space-joined byte length is at most
// `byte_cap`. `warning` is set when even the first token does not fit.
Sentence prefix_baseline(const Sentence& source, std::size_t byte_cap = 75, bool* warning = nullptr);

}  // namespace seq3
