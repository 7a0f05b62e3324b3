#pragma once
// Whole-run drivers shared by the command-line tool and the acceptance
// suite: corpus preparation, LM pretraining and SEQ3 training with logs and
// checkpoints.

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <vector>

#include "seq3/lm.hpp"
#include "seq3/model.hpp"
#include "seq3/rouge.hpp"
#include "seq3/run_config.hpp"
#include "seq3/vocab.hpp"

namespace seq3 {

std::vector<std::vector<TokenId>> encode_corpus(const std::vector<Sentence>& sentences, const Vocabulary& vocab);

// Rng streams derived from the run seed, so that commands do not share draws.
enum class Stream : std::uint64_t { LmInit = 1, LmTrain, ModelInit, ModelTrain };
Rng stream_rng(std::uint64_t seed, Stream stream);

struct LmRun {
  std::optional<Checkpoint> resume;                  // continue from here
  std::optional<std::filesystem::path> checkpoint;   // rewritten after every epoch
  std::ostream* log = nullptr;                       // one JSON line per epoch
  std::ostream* progress = nullptr;                  // human-readable lines
};

// Trains to config.lm.epochs total epochs and returns the model frozen.
LmModel run_lm_training(const RunConfig& config, const std::vector<std::vector<TokenId>>& corpus,
                        const Vocabulary& vocab, const LmRun& run = {});

struct Seq3Run {
  std::optional<Checkpoint> resume;
  std::optional<std::filesystem::path> checkpoint_dir;  // epoch-N.ckpt and final.ckpt
  std::ostream* log = nullptr;                          // header line, then one JSON line per step
  std::ostream* progress = nullptr;
  std::optional<ad::Tensor> embeddings;                 // initial shared embedding matrix
};

struct Seq3Result {
  Seq3Model model;
  std::vector<EpochSummary> epochs;
};

Seq3Result run_seq3_training(const RunConfig& config, const std::vector<std::vector<TokenId>>& corpus,
                             const Vocabulary& vocab, const IdfTable& idf, const LmModel* lm, const Seq3Run& run = {});

// First JSON line of a training log: loss weights and the resolved config.
std::string training_log_header(const RunConfig& config);

// Mean P/R/F1 per system as a table or JSON.
struct SystemScores {
  std::string name;
  EvalReport report;
};
std::string format_report_json(const std::vector<SystemScores>& systems, const std::string& config_echo);
std::string format_report_table(const std::vector<SystemScores>& systems);

}  // namespace seq3
