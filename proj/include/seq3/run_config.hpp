#pragma once
// Resolved settings for one command: every model, LM, loss and synthetic
// corpus field as a dotted key, file paths and the mandatory seed.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "seq3/keyvalue.hpp"
#include "seq3/lm.hpp"
#include "seq3/model.hpp"
#include "seq3/synthetic.hpp"

namespace seq3 {

struct RunPaths {
  std::string corpus;
  std::string embeddings;   // optional GloVe-format file
  std::string vocab;
  std::string idf;
  std::string lm;           // LM checkpoint
  std::string checkpoints;  // directory for SEQ3 checkpoints
  std::string output;
};

struct RunConfig {
  std::optional<std::uint64_t> seed;
  std::size_t vocab_cap = kDefaultVocabCap;
  LmConfig lm;
  Seq3Config model;
  SyntheticSpec synthetic;
  RunPaths paths;

  // Full-size models, or the desk-scale profile.
  static RunConfig defaults(bool desk);

  // Keys: seed, vocab_cap, lm.*, model.*, loss.*, synthetic.*, paths.*.
  // InputError on unknown keys, ParseError on malformed values.
  void apply(const KeyValues& values);
  // InputError when any section is invalid.
  void validate() const;
  // The seed; InputError when none was given. Every command that draws
  // random numbers calls this.
  std::uint64_t require_seed() const;

  // Sorted "key = value" text of every field; parses back with apply.
  std::string to_text() const;

  // Defaults, then the file (if any), then the overrides, then validation.
  static RunConfig resolve(bool desk, const std::optional<std::filesystem::path>& file,
                           const KeyValues& overrides);

 private:
  void bind(ConfigBinder& binder);
};

// "key=value" strings to a map; ParseError without '=' or on duplicates.
KeyValues parse_overrides(const std::vector<std::string>& assignments);

}  // namespace seq3
