#include "seq3/rouge.hpp"

#include <algorithm>
#include <map>

#include "seq3/errors.hpp"

namespace seq3 {

namespace {

Sentence normalize(const Sentence& tokens, bool stem) {
  Sentence out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(stem ? porter_stem(t) : t);
  return out;
}

using Counts = std::map<Sentence, std::size_t>;

Counts ngrams(const Sentence& tokens, std::size_t n) {
  Counts counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) ++counts[Sentence(tokens.begin() + i, tokens.begin() + i + n)];
  return counts;
}

PRF from_overlap(double overlap, double candidate_total, double reference_total) {
  PRF s;
  s.precision = candidate_total > 0 ? overlap / candidate_total : 0.0;
  s.recall = reference_total > 0 ? overlap / reference_total : 0.0;
  s.f1 = f1_score(s.precision, s.recall);
  return s;
}

// Keeps the first reference with the highest F1.
template <typename Score>
PRF best_over(const std::vector<Sentence>& references, Score score) {
  if (references.empty()) throw InputError("rouge: no references");
  PRF best;
  bool first = true;
  for (const auto& ref : references) {
    const PRF s = score(ref);
    if (first || s.f1 > best.f1) best = s;
    first = false;
  }
  return best;
}

}  // namespace

double f1_score(double precision, double recall) {
  const double sum = precision + recall;
  return sum > 0.0 ? 2.0 * precision * recall / sum : 0.0;
}

PRF rouge_n(const Sentence& candidate, const std::vector<Sentence>& references, int n, bool stem) {
  if (n != 1 && n != 2) throw InputError("rouge_n: n must be 1 or 2, got " + std::to_string(n));
  const auto order = static_cast<std::size_t>(n);
  const Counts cand = ngrams(normalize(candidate, stem), order);
  std::size_t cand_total = 0;
  for (const auto& [g, c] : cand) cand_total += c;
  return best_over(references, [&](const Sentence& reference) {
    const Counts ref = ngrams(normalize(reference, stem), order);
    std::size_t overlap = 0, ref_total = 0;
    for (const auto& [g, c] : ref) {
      ref_total += c;
      if (auto it = cand.find(g); it != cand.end()) overlap += std::min(c, it->second);
    }
    return from_overlap(static_cast<double>(overlap), static_cast<double>(cand_total), static_cast<double>(ref_total));
  });
}

std::size_t lcs_length(const Sentence& a, const Sentence& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j)
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

PRF rouge_l(const Sentence& candidate, const std::vector<Sentence>& references, bool stem) {
  const Sentence cand = normalize(candidate, stem);
  return best_over(references, [&](const Sentence& reference) {
    const Sentence ref = normalize(reference, stem);
    return from_overlap(static_cast<double>(lcs_length(cand, ref)), static_cast<double>(cand.size()),
                        static_cast<double>(ref.size()));
  });
}

RougeScores rouge_all(const Sentence& candidate, const std::vector<Sentence>& references, bool stem) {
  return {rouge_n(candidate, references, 1, stem), rouge_n(candidate, references, 2, stem),
          rouge_l(candidate, references, stem)};
}

EvalReport evaluate_set(const std::vector<EvalExample>& examples, bool stem) {
  EvalReport report;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    std::vector<Sentence> refs;
    for (const auto& r : examples[i].references)
      if (!r.empty()) refs.push_back(r);
    if (refs.empty()) {
      ++report.filtered;
      continue;
    }
    report.per_example.push_back(rouge_all(examples[i].candidate, refs, stem));
    report.kept.push_back(i);
  }
  if (report.per_example.empty())
    throw InputError("evaluate: nothing to score (" + std::to_string(report.filtered) +
                     " examples filtered for empty references)");
  const double n = static_cast<double>(report.per_example.size());
  auto add = [](PRF& acc, const PRF& s) {
    acc.precision += s.precision;
    acc.recall += s.recall;
    acc.f1 += s.f1;
  };
  for (const auto& s : report.per_example) {
    add(report.mean.r1, s.r1);
    add(report.mean.r2, s.r2);
    add(report.mean.rl, s.rl);
  }
  for (PRF* m : {&report.mean.r1, &report.mean.r2, &report.mean.rl}) {
    m->precision /= n;
    m->recall /= n;
    m->f1 /= n;
  }
  return report;
}

Sentence lead_n_baseline(const Sentence& source, std::size_t n) {
  return Sentence(source.begin(), source.begin() + static_cast<std::ptrdiff_t>(std::min(n, source.size())));
}

Sentence prefix_baseline(const Sentence& source, std::size_t byte_cap, bool* warning) {
  Sentence out;
  std::size_t bytes = 0;
  for (const auto& token : source) {
    const std::size_t next = bytes + (out.empty() ? 0 : 1) + token.size();
    if (next > byte_cap) break;
    out.push_back(token);
    bytes = next;
  }
  if (warning) *warning = out.empty() && !source.empty();
  return out;
}

}  // namespace seq3
