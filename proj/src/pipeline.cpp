#include "seq3/pipeline.hpp"

#include <cstdio>
#include <ostream>
#include <sstream>

#include "json.hpp"
#include "seq3/errors.hpp"

namespace seq3 {

std::vector<std::vector<TokenId>> encode_corpus(const std::vector<Sentence>& sentences, const Vocabulary& vocab) {
  std::vector<std::vector<TokenId>> out;
  out.reserve(sentences.size());
  for (const auto& s : sentences)
    if (!s.empty()) out.push_back(encode_with_oov(s, vocab).ids);
  return out;
}

Rng stream_rng(std::uint64_t seed, Stream stream) {
  // splitmix64 finalizer over seed and stream index
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(stream);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return Rng(z ^ (z >> 31));
}

LmModel run_lm_training(const RunConfig& config, const std::vector<std::vector<TokenId>>& corpus,
                        const Vocabulary& vocab, const LmRun& run) {
  const std::uint64_t seed = config.require_seed();
  Rng init = stream_rng(seed, Stream::LmInit);
  Rng rng = stream_rng(seed, Stream::LmTrain);
  LmModel model(config.lm, vocab.size(), init);
  if (run.resume) {
    // Weights come from the checkpoint; sizes and schedule from this run.
    const LmModel saved = lm_from_checkpoint(*run.resume, vocab.content_hash(), vocab.size());
    restore(model.parameters(), snapshot(saved.parameters()));
  }
  LmTrainer trainer(model, rng);
  if (run.resume) {
    trainer.resume(run.resume->epoch, *run.resume);
    if (!run.resume->rng_state.empty()) rng.set_state(run.resume->rng_state);
  }
  const std::string echo = config.to_text();
  while (trainer.epochs_done() < config.lm.epochs) {
    const LmEpochReport r = trainer.run_epoch(corpus);
    if (run.log) {
      nlohmann::ordered_json j;
      j["epoch"] = r.epoch;
      j["perplexity"] = r.perplexity;
      j["lr"] = r.lr;
      j["steps"] = r.steps;
      *run.log << j.dump() << '\n' << std::flush;
    }
    if (run.progress) {
      char line[128];
      std::snprintf(line, sizeof line, "lm epoch %zu/%zu  perplexity %.3f  lr %.2e\n", r.epoch,
                    config.lm.epochs, r.perplexity, r.lr);
      *run.progress << line << std::flush;
    }
    if (run.checkpoint) {
      Checkpoint ck = make_lm_checkpoint(model, vocab.content_hash(), trainer.epochs_done(), &trainer.optimizer(), &rng);
      ck.echo = echo;
      save_checkpoint(ck, *run.checkpoint);
    }
  }
  model.freeze();
  return model;
}

std::string training_log_header(const RunConfig& config) {
  nlohmann::ordered_json j;
  j["event"] = "start";
  j["lambda_r"] = config.model.loss.reconstruction;
  j["lambda_p"] = config.model.loss.prior;
  j["lambda_t"] = config.model.loss.topic;
  j["lambda_l"] = config.model.loss.length;
  std::vector<std::string> zeroed;
  if (config.model.loss.reconstruction == 0.0) zeroed.push_back("reconstruction");
  if (config.model.loss.prior == 0.0) zeroed.push_back("prior");
  if (config.model.loss.topic == 0.0) zeroed.push_back("topic");
  if (config.model.loss.length == 0.0) zeroed.push_back("length");
  j["zeroed"] = zeroed;
  j["config"] = config.to_text();
  return j.dump();
}

Seq3Result run_seq3_training(const RunConfig& config, const std::vector<std::vector<TokenId>>& corpus,
                             const Vocabulary& vocab, const IdfTable& idf, const LmModel* lm, const Seq3Run& run) {
  const std::uint64_t seed = config.require_seed();
  if (config.model.loss.prior > 0.0 && lm == nullptr)
    throw InputError("train: lambda_p > 0 needs a pretrained LM (paths.lm)");
  Rng init = stream_rng(seed, Stream::ModelInit);
  Rng rng = stream_rng(seed, Stream::ModelTrain);
  Seq3Result result{Seq3Model(config.model, vocab.size(), init, run.embeddings), {}};
  const std::uint64_t hash = vocab.content_hash();
  const std::string echo = config.to_text();
  {
    Seq3Trainer trainer(result.model, lm, idf, rng);
    if (run.resume) {
      check_seq3_checkpoint(*run.resume, hash);
      trainer.resume(*run.resume);
    }
    if (run.log && !run.resume) *run.log << training_log_header(config) << '\n';
    if (run.checkpoint_dir) std::filesystem::create_directories(*run.checkpoint_dir);
    while (trainer.epochs_done() < config.model.epochs) {
      EpochSummary s = trainer.run_epoch(corpus, [&](const TrainRecord& r) {
        if (run.log) *run.log << r.to_json() << '\n';
      });
      if (run.log) run.log->flush();
      if (run.progress) {
        char line[160];
        std::snprintf(line, sizeof line, "epoch %zu/%zu  steps %zu  mean loss %.4f  first batch %.4f\n", s.epoch,
                      config.model.epochs, s.steps, s.mean_total, s.first_batch_total);
        *run.progress << line << std::flush;
      }
      if (run.checkpoint_dir) {
        const Checkpoint ck = trainer.checkpoint(hash, echo);
        save_checkpoint(ck, *run.checkpoint_dir / ("epoch-" + std::to_string(s.epoch) + ".ckpt"));
        save_checkpoint(ck, *run.checkpoint_dir / "final.ckpt");
      }
      result.epochs.push_back(s);
    }
  }
  return result;
}

namespace {

nlohmann::ordered_json prf_json(const PRF& s) {
  nlohmann::ordered_json j;
  j["precision"] = s.precision;
  j["recall"] = s.recall;
  j["f1"] = s.f1;
  return j;
}

}  // namespace

std::string format_report_json(const std::vector<SystemScores>& systems, const std::string& config_echo) {
  nlohmann::ordered_json j;
  j["config"] = config_echo;
  for (const auto& s : systems) {
    nlohmann::ordered_json sys;
    sys["examples"] = s.report.per_example.size();
    sys["filtered"] = s.report.filtered;
    sys["rouge1"] = prf_json(s.report.mean.r1);
    sys["rouge2"] = prf_json(s.report.mean.r2);
    sys["rougeL"] = prf_json(s.report.mean.rl);
    nlohmann::ordered_json per = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < s.report.per_example.size(); ++i) {
      const auto& e = s.report.per_example[i];
      per.push_back({{"index", s.report.kept[i]}, {"r1", e.r1.f1}, {"r2", e.r2.f1}, {"rl", e.rl.f1}});
    }
    sys["per_example"] = per;
    j["systems"][s.name] = sys;
  }
  return j.dump(2);
}

std::string format_report_table(const std::vector<SystemScores>& systems) {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof line, "%-16s %8s %8s %8s\n", "system", "R-1", "R-2", "R-L");
  out << line;
  for (const auto& s : systems) {
    std::snprintf(line, sizeof line, "%-16s %8.2f %8.2f %8.2f\n", s.name.c_str(), 100 * s.report.mean.r1.f1,
                  100 * s.report.mean.r2.f1, 100 * s.report.mean.rl.f1);
    out << line;
  }
  if (!systems.empty())
    out << "examples scored: " << systems.front().report.per_example.size()
        << ", filtered (empty reference): " << systems.front().report.filtered << "\n";
  return out.str();
}

}  // namespace seq3
