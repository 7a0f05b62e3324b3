#pragma once
// Deterministic toy corpus: each sentence hides a few rare "topic" words
// among frequent filler words; the topic words double as a pseudo-reference
// summary.

#include <cstdint>
#include <string>
#include <vector>

#include "seq3/keyvalue.hpp"
#include "seq3/vocab.hpp"

namespace seq3 {

struct SyntheticSpec {
  std::size_t vocab_size = 200;  // distinct word types (filler + topic)
  std::size_t filler_words = 40;
  std::size_t sentences = 5000;
  std::size_t min_length = 8;
  std::size_t max_length = 16;
  std::size_t min_topics = 2;
  std::size_t max_topics = 4;
  // Probability that a filler is the successor (cyclic) of the previous
  // filler; otherwise it is drawn from Zipf(1).
  double filler_continuation = 0.0;
  std::uint64_t seed = 1;

  void validate() const;
  void bind(ConfigBinder& binder, const std::string& prefix);
};

struct SyntheticExample {
  Sentence sentence;
  Sentence topics;  // in order of appearance
};

std::vector<SyntheticExample> generate_synthetic(const SyntheticSpec& spec);

// Surface form of filler i ("f12") and topic word i ("t7").
std::string filler_word(std::size_t i);
std::string topic_word(std::size_t i);

}  // namespace seq3
