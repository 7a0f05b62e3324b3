#pragma once
// Brute-force ROUGE references, deliberately written without the dynamic
// programming or hashing used by the library.

#include <algorithm>
#include <vector>

#include "seq3/vocab.hpp"

namespace seq3::oracle {

// Clipped overlap by matching each candidate n-gram against an unused
// reference n-gram, one at a time.
inline double brute_overlap(const Sentence& c, const Sentence& r, std::size_t n, double& cand_total, double& ref_total) {
  std::vector<Sentence> cg, rg;
  for (std::size_t i = 0; i + n <= c.size(); ++i) cg.emplace_back(c.begin() + i, c.begin() + i + n);
  for (std::size_t i = 0; i + n <= r.size(); ++i) rg.emplace_back(r.begin() + i, r.begin() + i + n);
  std::vector<bool> used(rg.size(), false);
  double overlap = 0;
  for (const auto& g : cg)
    for (std::size_t j = 0; j < rg.size(); ++j)
      if (!used[j] && rg[j] == g) {
        used[j] = true;
        ++overlap;
        break;
      }
  cand_total = static_cast<double>(cg.size());
  ref_total = static_cast<double>(rg.size());
  return overlap;
}

// Longest common subsequence by enumerating every subsequence of `a`.
inline std::size_t brute_lcs(const Sentence& a, const Sentence& b) {
  std::size_t best = 0;
  for (unsigned mask = 0; mask < (1u << a.size()); ++mask) {
    std::size_t j = 0, len = 0;
    bool ok = true;
    for (std::size_t i = 0; i < a.size() && ok; ++i) {
      if (!(mask & (1u << i))) continue;
      while (j < b.size() && b[j] != a[i]) ++j;
      if (j == b.size()) ok = false;
      else {
        ++j;
        ++len;
      }
    }
    if (ok) best = std::max(best, len);
  }
  return best;
}

inline double oracle_f1(double overlap, double ct, double rt) {
  const double p = ct > 0 ? overlap / ct : 0, r = rt > 0 ? overlap / rt : 0;
  return p + r > 0 ? 2 * p * r / (p + r) : 0;
}

}  // namespace seq3::oracle
