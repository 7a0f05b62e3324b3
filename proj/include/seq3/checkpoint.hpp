#pragma once
// Versioned single-file container for model parameters, optimizer moments,
// rng state and the configuration that produced them.
//
// Layout (all integers little-endian):
//   "SEQ3CKPT" u32 version
//   str kind, str config, str echo, u64 vocab_hash, u64 epoch, u64 step
//   u64 tensor count, then per tensor: str name, u32 rank, u64 dims..., f64 values...
//   u64 adam steps, u64 moment count, then per entry: str name, u64 n, f64 m[n], f64 v[n]
//   str rng state, "END!"
// where str = u64 byte length followed by the bytes.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "seq3/params.hpp"
#include "seq3/rng.hpp"

namespace seq3 {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct TensorRecord {
  std::string name;
  ad::Shape shape;
  std::vector<double> values;
};

struct Checkpoint {
  std::string kind;     // "seq3" or "lm"
  std::string config;   // key = value text of the owning model's config
  std::string echo;     // resolved run configuration, informational
  std::uint64_t vocab_hash = 0;
  std::uint64_t epoch = 0;
  std::uint64_t step = 0;
  std::vector<TensorRecord> tensors;
  std::uint64_t adam_steps = 0;
  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> moments;
  std::string rng_state;
};

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
// CorruptFileError on bad magic or truncation, CompatibilityError on a
// version mismatch.
Checkpoint load_checkpoint(const std::filesystem::path& path);

std::vector<TensorRecord> snapshot(const ParameterStore& store);
// Copies values into same-named tensors; CompatibilityError when names or
// shapes differ.
void restore(ParameterStore& store, const std::vector<TensorRecord>& tensors);

void capture_optimizer(Checkpoint& checkpoint, const Adam& adam);
void restore_optimizer(const Checkpoint& checkpoint, Adam& adam);

}  // namespace seq3
