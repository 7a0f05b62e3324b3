#include "seq3/vocab.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <unordered_set>

#include "seq3/errors.hpp"

namespace seq3 {

namespace {

std::vector<std::string> reserved_tokens() {
  std::vector<std::string> out = {"<pad>", "<s>", "</s>", "<unk>"};
  for (std::size_t i = 1; i <= kNumOovTokens; ++i) out.push_back("<oov" + std::to_string(i) + ">");
  return out;
}

}  // namespace

Vocabulary::Vocabulary() {
  for (const auto& t : reserved_tokens()) push(t);
}

void Vocabulary::push(const std::string& token) {
  ids_.emplace(token, tokens_.size());
  tokens_.push_back(token);
}

Vocabulary Vocabulary::build(const std::vector<Sentence>& corpus, std::size_t cap) {
  struct Entry {
    std::size_t count = 0;
    std::size_t first = 0;
  };
  std::unordered_map<std::string, Entry> stats;
  std::vector<std::string> order;
  std::size_t total = 0;
  Vocabulary reserved;
  for (const auto& sentence : corpus)
    for (const auto& tok : sentence) {
      ++total;
      if (reserved.contains(tok)) continue;
      auto [it, inserted] = stats.try_emplace(tok, Entry{0, order.size()});
      if (inserted) order.push_back(tok);
      ++it->second.count;
    }
  if (total == 0) throw InputError("build_vocab: empty corpus");

  std::sort(order.begin(), order.end(), [&](const std::string& a, const std::string& b) {
    const auto& ea = stats.at(a);
    const auto& eb = stats.at(b);
    if (ea.count != eb.count) return ea.count > eb.count;
    return ea.first < eb.first;
  });
  if (order.size() > cap) order.resize(cap);
  return from_content(order);
}

Vocabulary Vocabulary::from_content(const std::vector<std::string>& content_tokens) {
  Vocabulary v;
  for (const auto& t : content_tokens) {
    if (v.contains(t)) throw InputError("vocabulary: duplicate token '" + t + "'");
    v.push(t);
  }
  return v;
}

TokenId Vocabulary::id(const std::string& token) const {
  auto it = ids_.find(token);
  return it == ids_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::token(TokenId id) const {
  if (id >= tokens_.size())
    throw IndexError("vocabulary: id " + std::to_string(id) + " outside size " + std::to_string(tokens_.size()));
  return tokens_[id];
}

std::uint64_t Vocabulary::content_hash() const {
  std::uint64_t h = 1469598103934665603ull;
  for (const auto& t : tokens_) {
    for (unsigned char c : t) {
      h ^= c;
      h *= 1099511628211ull;
    }
    h ^= 0xff;  // separator, never a UTF-8 byte
    h *= 1099511628211ull;
  }
  return h;
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write vocabulary file " + path.string());
  for (std::size_t i = kNumReserved; i < tokens_.size(); ++i) out << tokens_[i] << '\n';
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read vocabulary file " + path.string());
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    tokens.push_back(line);
  }
  return from_content(tokens);
}

TokenId OovMap::assign(const std::string& surface) {
  if (auto it = ids_.find(surface); it != ids_.end()) return it->second;
  if (surfaces_.size() == kNumOovTokens) return kUnk;
  const TokenId id = oov_id(surfaces_.size());
  surfaces_.push_back(surface);
  ids_.emplace(surface, id);
  return id;
}

const std::string* OovMap::surface(TokenId id) const {
  if (!is_oov(id)) return nullptr;
  const std::size_t i = id - kFirstOov;
  return i < surfaces_.size() ? &surfaces_[i] : nullptr;
}

EncodedSentence encode_with_oov(const Sentence& sentence, const Vocabulary& vocab) {
  EncodedSentence out;
  out.ids.reserve(sentence.size());
  for (const auto& tok : sentence) {
    const TokenId id = vocab.id(tok);
    // Reserved surface forms in raw text are treated as unknown words.
    if (id == kUnk || id < kNumReserved)
      out.ids.push_back(out.oov.assign(tok));
    else
      out.ids.push_back(id);
  }
  return out;
}

Sentence decode_restore(const std::vector<TokenId>& ids, const OovMap& oov, const Vocabulary& vocab) {
  Sentence out;
  out.reserve(ids.size());
  for (TokenId id : ids) {
    if (is_oov(id)) {
      const std::string* s = oov.surface(id);
      out.push_back(s ? *s : vocab.token(kUnk));
    } else {
      out.push_back(vocab.token(id));
    }
  }
  return out;
}

IdfTable compute_idf(const std::vector<Sentence>& corpus, const Vocabulary& vocab) {
  if (corpus.empty()) throw InputError("compute_idf: empty corpus");
  std::vector<std::size_t> df(vocab.size(), 0);
  std::unordered_set<TokenId> seen;
  for (const auto& doc : corpus) {
    seen.clear();
    for (const auto& tok : doc) {
      if (!vocab.contains(tok)) continue;
      const TokenId id = vocab.id(tok);
      if (id >= kNumReserved) seen.insert(id);
    }
    for (TokenId id : seen) ++df[id];
  }
  const double d = static_cast<double>(corpus.size());
  std::vector<double> idf(vocab.size());
  for (TokenId id = 0; id < vocab.size(); ++id)
    idf[id] = df[id] == 0 ? std::log(d) : std::max(0.0, std::log(d / (1.0 + static_cast<double>(df[id]))));
  return IdfTable(std::move(idf), corpus.size());
}

void IdfTable::save(const std::filesystem::path& path, const Vocabulary& vocab) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write idf file " + path.string());
  out << "#documents " << documents_ << '\n';
  out << std::setprecision(17);
  for (TokenId id = 0; id < idf_.size(); ++id) out << vocab.token(id) << ' ' << idf_[id] << '\n';
}

IdfTable IdfTable::load(const std::filesystem::path& path, const Vocabulary& vocab) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read idf file " + path.string());
  std::string line;
  std::size_t documents = 0;
  if (!std::getline(in, line) || std::sscanf(line.c_str(), "#documents %zu", &documents) != 1)
    throw ParseError(path.string() + ":1: missing '#documents' header");
  std::vector<double> idf(vocab.size(), std::log(static_cast<double>(documents)));
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream is(line);
    std::string tok;
    double value;
    if (!(is >> tok >> value)) throw ParseError(path.string() + ":" + std::to_string(lineno) + ": malformed idf line");
    if (vocab.contains(tok)) idf[vocab.id(tok)] = value;
  }
  return IdfTable(std::move(idf), documents);
}

ad::Tensor random_embeddings(const Vocabulary& vocab, std::size_t dim, Rng& rng) {
  if (dim == 0) throw InputError("embedding dimension must be positive");
  std::vector<double> values(vocab.size() * dim);
  for (double& v : values) v = rng.uniform(-kEmbeddingInitRange, kEmbeddingInitRange);
  return ad::Tensor::parameter(std::move(values), {vocab.size(), dim});
}

LoadedEmbeddings load_pretrained_embeddings(const std::filesystem::path& path, const Vocabulary& vocab,
                                            std::size_t dim, Rng& rng) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot read embedding file " + path.string());
  LoadedEmbeddings out{random_embeddings(vocab, dim, rng), 0};
  auto values = out.matrix.mutable_values();
  std::vector<bool> filled(vocab.size(), false);
  std::string line;
  std::size_t lineno = 0;
  std::vector<double> row;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream is(line);
    std::string tok, field;
    is >> tok;
    row.clear();
    while (is >> field) {
      char* end = nullptr;
      const double v = std::strtod(field.c_str(), &end);
      if (end == field.c_str() || *end != '\0')
        throw ParseError(path.string() + ":" + std::to_string(lineno) + ": malformed number '" + field + "'");
      row.push_back(v);
    }
    if (row.size() != dim)
      throw InputError(path.string() + ":" + std::to_string(lineno) + ": expected " + std::to_string(dim) +
                       " values, found " + std::to_string(row.size()));
    if (!vocab.contains(tok)) continue;
    const TokenId id = vocab.id(tok);
    if (id < kNumReserved || filled[id]) continue;
    std::copy(row.begin(), row.end(), values.begin() + static_cast<long>(id * dim));
    filled[id] = true;
    ++out.matched_rows;
  }
  return out;
}

Sentence split_tokens(const std::string& line) {
  Sentence out;
  std::istringstream is(line);
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

std::vector<Sentence> read_corpus(const std::filesystem::path& path, bool keep_empty) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot read corpus " + path.string());
  std::vector<Sentence> out;
  std::string line;
  while (std::getline(in, line)) {
    Sentence s = split_tokens(line);
    if (!s.empty() || keep_empty) out.push_back(std::move(s));
  }
  return out;
}

}  // namespace seq3
