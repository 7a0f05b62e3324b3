#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

#include "seq3/rng.hpp"
#include "seq3/tensor.hpp"

namespace seq3 {

using TokenId = std::size_t;
using Sentence = std::vector<std::string>;

inline constexpr std::size_t kNumOovTokens = 10;
inline constexpr std::size_t kDefaultVocabCap = 15000;

// Reserved ids occupy the fixed prefix [0, kNumReserved).
inline constexpr TokenId kPad = 0;
inline constexpr TokenId kSos = 1;
inline constexpr TokenId kEos = 2;
inline constexpr TokenId kUnk = 3;
inline constexpr TokenId kFirstOov = 4;
inline constexpr std::size_t kNumReserved = kFirstOov + kNumOovTokens;

inline constexpr TokenId oov_id(std::size_t i) { return kFirstOov + i; }  // i in [0, 10)
inline constexpr bool is_oov(TokenId id) { return id >= kFirstOov && id < kNumReserved; }

class Vocabulary {
 public:
  // Reserved tokens only.
  Vocabulary();

  // The `cap` most frequent tokens, ties broken by first occurrence.
  static Vocabulary build(const std::vector<Sentence>& corpus, std::size_t cap = kDefaultVocabCap);
  static Vocabulary from_content(const std::vector<std::string>& content_tokens);

  std::size_t size() const { return tokens_.size(); }
  std::size_t content_size() const { return tokens_.size() - kNumReserved; }
  bool contains(const std::string& token) const { return ids_.count(token) != 0; }
  // Id of a known token; unknown tokens map to UNK.
  TokenId id(const std::string& token) const;
  const std::string& token(TokenId id) const;

  // FNV-1a over the id-ordered token list.
  std::uint64_t content_hash() const;

  // One content token per line, in id order after the reserved prefix.
  void save(const std::filesystem::path& path) const;
  static Vocabulary load(const std::filesystem::path& path);

 private:
  void push(const std::string& token);

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> ids_;
};

// Per-sentence assignment of unknown surface tokens to OOV-copy ids.
class OovMap {
 public:
  // Returns the OOV id for `surface`, assigning the next free one; UNK once
  // all ten are taken.
  TokenId assign(const std::string& surface);
  // Surface token for an OOV id, or nullptr when unassigned.
  const std::string* surface(TokenId id) const;
  std::size_t size() const { return surfaces_.size(); }
  bool empty() const { return surfaces_.empty(); }

 private:
  std::vector<std::string> surfaces_;  // index i <-> oov_id(i)
  std::unordered_map<std::string, TokenId> ids_;
};

struct EncodedSentence {
  std::vector<TokenId> ids;
  OovMap oov;
};

EncodedSentence encode_with_oov(const Sentence& sentence, const Vocabulary& vocab);
Sentence decode_restore(const std::vector<TokenId>& ids, const OovMap& oov, const Vocabulary& vocab);

class IdfTable {
 public:
  IdfTable() = default;
  IdfTable(std::vector<double> idf, std::size_t documents) : idf_(std::move(idf)), documents_(documents) {}

  double idf(TokenId id) const { return idf_.at(id); }
  std::size_t documents() const { return documents_; }
  std::size_t size() const { return idf_.size(); }

  void save(const std::filesystem::path& path, const Vocabulary& vocab) const;
  static IdfTable load(const std::filesystem::path& path, const Vocabulary& vocab);

 private:
  std::vector<double> idf_;
  std::size_t documents_ = 0;
};

// idf(w) = max(0, log(D / (1 + df(w)))) over the vocabulary's content
// tokens; ids never seen in the corpus (reserved tokens included) get log D.
IdfTable compute_idf(const std::vector<Sentence>& corpus, const Vocabulary& vocab);

inline constexpr double kEmbeddingInitRange = 0.05;

// |V| x dim trainable matrix, uniform in [-0.05, 0.05].
ad::Tensor random_embeddings(const Vocabulary& vocab, std::size_t dim, Rng& rng);

struct LoadedEmbeddings {
  ad::Tensor matrix;
  std::size_t matched_rows = 0;
};

// GloVe text format. Rows of tokens found in the file are copied; all other
// rows keep their random initialization.
LoadedEmbeddings load_pretrained_embeddings(const std::filesystem::path& path, const Vocabulary& vocab,
                                            std::size_t dim, Rng& rng);

// Whitespace tokenization of one line.
Sentence split_tokens(const std::string& line);
// Empty lines are skipped unless `keep_empty`.
std::vector<Sentence> read_corpus(const std::filesystem::path& path, bool keep_empty = false);

}  // namespace seq3
