#include "seq3/synthetic.hpp"

#include <algorithm>
#include <cmath>

#include "seq3/errors.hpp"
#include "seq3/rng.hpp"

namespace seq3 {

void SyntheticSpec::validate() const {
  if (filler_words == 0 || filler_words >= vocab_size) throw InputError("synthetic: need 0 < filler_words < vocab_size");
  if (!(filler_continuation >= 0.0 && filler_continuation <= 1.0))
    throw InputError("synthetic: filler_continuation must lie in [0, 1]");
  if (sentences == 0) throw InputError("synthetic: sentences must be positive");
  if (min_topics == 0 || min_topics > max_topics) throw InputError("synthetic: need 0 < min_topics <= max_topics");
  if (max_topics > vocab_size - filler_words) throw InputError("synthetic: more topics per sentence than topic words");
  if (min_length < max_topics || min_length > max_length)
    throw InputError("synthetic: need max_topics <= min_length <= max_length");
}

void SyntheticSpec::bind(ConfigBinder& b, const std::string& p) {
  b.bind(p + "vocab_size", vocab_size);
  b.bind(p + "filler_words", filler_words);
  b.bind(p + "sentences", sentences);
  b.bind(p + "min_length", min_length);
  b.bind(p + "max_length", max_length);
  b.bind(p + "min_topics", min_topics);
  b.bind(p + "max_topics", max_topics);
  b.bind(p + "filler_continuation", filler_continuation);
}

std::string filler_word(std::size_t i) { return "f" + std::to_string(i); }
std::string topic_word(std::size_t i) { return "t" + std::to_string(i); }

std::vector<SyntheticExample> generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  // Zipf(1) weights over the fillers.
  std::vector<double> cdf(spec.filler_words);
  double acc = 0.0;
  for (std::size_t i = 0; i < spec.filler_words; ++i) cdf[i] = acc += 1.0 / static_cast<double>(i + 1);
  for (double& c : cdf) c /= acc;
  const std::size_t topic_pool = spec.vocab_size - spec.filler_words;

  std::vector<SyntheticExample> out;
  out.reserve(spec.sentences);
  for (std::size_t s = 0; s < spec.sentences; ++s) {
    const std::size_t len = spec.min_length + rng.below(spec.max_length - spec.min_length + 1);
    const std::size_t k = spec.min_topics + rng.below(spec.max_topics - spec.min_topics + 1);
    // k distinct topic words and k distinct positions (partial Fisher-Yates).
    std::vector<std::size_t> topics;
    while (topics.size() < k) {
      const std::size_t t = rng.below(topic_pool);
      if (std::find(topics.begin(), topics.end(), t) == topics.end()) topics.push_back(t);
    }
    std::vector<std::size_t> positions(len);
    for (std::size_t i = 0; i < len; ++i) positions[i] = i;
    for (std::size_t i = 0; i < k; ++i) std::swap(positions[i], positions[i + rng.below(len - i)]);
    std::vector<long> slot(len, -1);
    for (std::size_t i = 0; i < k; ++i) slot[positions[i]] = static_cast<long>(topics[i]);

    SyntheticExample ex;
    std::size_t prev = spec.filler_words;  // none yet
    for (std::size_t i = 0; i < len; ++i) {
      if (slot[i] >= 0) {
        ex.sentence.push_back(topic_word(static_cast<std::size_t>(slot[i])));
        ex.topics.push_back(ex.sentence.back());
      } else {
        std::size_t f = 0;
        if (prev < spec.filler_words && rng.uniform() < spec.filler_continuation) {
          f = (prev + 1) % spec.filler_words;
        } else {
          const double u = rng.uniform();
          f = std::min(static_cast<std::size_t>(std::lower_bound(cdf.begin(), cdf.end(), u) - cdf.begin()),
                       spec.filler_words - 1);
        }
        ex.sentence.push_back(filler_word(f));
        prev = f;
      }
    }
    out.push_back(std::move(ex));
  }
  return out;
}

}  // namespace seq3
