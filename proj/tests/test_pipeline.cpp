#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "seq3/checkpoint.hpp"
#include "seq3/errors.hpp"
#include "seq3/pipeline.hpp"
#include "seq3/synthetic.hpp"

using namespace seq3;
namespace fs = std::filesystem;

namespace {

struct Tiny {
  std::vector<Sentence> sentences;
  Vocabulary vocab;
  IdfTable idf;
  std::vector<std::vector<TokenId>> corpus;
  RunConfig config;
};

Tiny tiny() {
  SyntheticSpec spec;
  spec.sentences = 40;
  spec.vocab_size = 40;
  spec.filler_words = 10;
  Tiny t;
  for (const auto& e : generate_synthetic(spec)) t.sentences.push_back(e.sentence);
  t.vocab = Vocabulary::build(t.sentences);
  t.idf = compute_idf(t.sentences, t.vocab);
  t.corpus = encode_corpus(t.sentences, t.vocab);
  t.config = RunConfig::defaults(true);
  t.config.seed = 4;
  t.config.lm.hidden = 8;
  t.config.lm.embedding_dim = 4;
  t.config.lm.layers = 1;
  t.config.lm.epochs = 1;
  t.config.model.embedding_dim = 6;
  t.config.model.encoder_hidden = 5;
  t.config.model.decoder_hidden = 8;
  t.config.model.batch_size = 8;
  t.config.model.epochs = 2;
  return t;
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "seq3_test_pipeline" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("rng streams are distinct and reproducible") {
  Rng a = stream_rng(1, Stream::LmInit), b = stream_rng(1, Stream::LmInit), c = stream_rng(1, Stream::ModelInit);
  Rng d = stream_rng(2, Stream::LmInit);
  const auto x = a.next_u64();
  CHECK(x == b.next_u64());
  CHECK(x != c.next_u64());
  CHECK(x != d.next_u64());
}

TEST_CASE("corpus encoding skips empty sentences") {
  const Vocabulary v = Vocabulary::from_content({"a", "b"});
  const auto enc = encode_corpus({{"a", "b"}, {}, {"zz", "a"}}, v);
  REQUIRE(enc.size() == 2);
  CHECK(enc[0] == std::vector<TokenId>{v.id("a"), v.id("b")});
  CHECK(enc[1][0] == oov_id(0));
}

TEST_CASE("commands that draw random numbers require a seed") {
  Tiny t = tiny();
  t.config.seed.reset();
  CHECK_THROWS_AS(run_lm_training(t.config, t.corpus, t.vocab), InputError);
  CHECK_THROWS_AS(run_seq3_training(t.config, t.corpus, t.vocab, t.idf, nullptr), InputError);
}

TEST_CASE("the prior loss needs an LM unless its weight is zero") {
  Tiny t = tiny();
  t.config.model.epochs = 1;
  CHECK_THROWS_AS(run_seq3_training(t.config, t.corpus, t.vocab, t.idf, nullptr), InputError);
  t.config.model.loss.prior = 0.0;
  std::ostringstream log;
  Seq3Run run;
  run.log = &log;
  const Seq3Result r = run_seq3_training(t.config, t.corpus, t.vocab, t.idf, nullptr, run);
  CHECK(r.epochs.size() == 1);
  std::istringstream lines(log.str());
  std::string line;
  std::getline(lines, line);
  const auto header = nlohmann::json::parse(line);
  CHECK(header.at("event") == "start");
  CHECK(header.at("zeroed") == nlohmann::json::array({"prior"}));
  std::size_t steps = 0;
  while (std::getline(lines, line)) {
    const auto j = nlohmann::json::parse(line);
    CHECK(j.at("loss_p").get<double>() == 0.0);
    CHECK(j.at("step").get<std::size_t>() == ++steps);
  }
  CHECK(steps == r.epochs[0].steps);
}

TEST_CASE("log lines carry every field in a fixed order") {
  TrainRecord r;
  r.step = 3;
  r.total = 1.5;
  const auto j = nlohmann::ordered_json::parse(r.to_json());
  std::vector<std::string> keys;
  for (const auto& [k, v] : j.items()) keys.push_back(k);
  CHECK(keys == std::vector<std::string>{"step", "epoch", "loss_r", "loss_p", "loss_t", "loss_l", "total", "lr",
                                         "grad_norm", "batch", "tokens"});
}

TEST_CASE("resuming from an epoch checkpoint reproduces the uninterrupted run") {
  const Tiny t = tiny();
  const auto dir = scratch("resume");
  const LmModel lm = run_lm_training(t.config, t.corpus, t.vocab);

  Seq3Run full;
  full.checkpoint_dir = dir / "full";
  std::ostringstream full_log;
  full.log = &full_log;
  run_seq3_training(t.config, t.corpus, t.vocab, t.idf, &lm, full);

  Seq3Run resumed;
  resumed.checkpoint_dir = dir / "resumed";
  resumed.resume = load_checkpoint(dir / "full" / "epoch-1.ckpt");
  run_seq3_training(t.config, t.corpus, t.vocab, t.idf, &lm, resumed);

  CHECK(bytes(dir / "full" / "final.ckpt") == bytes(dir / "resumed" / "final.ckpt"));
}

TEST_CASE("LM checkpoints resume and reject a different vocabulary") {
  Tiny t = tiny();
  const auto dir = scratch("lm");
  t.config.lm.epochs = 2;
  LmRun run;
  run.checkpoint = dir / "lm.ckpt";
  run_lm_training(t.config, t.corpus, t.vocab, run);
  const std::string two = bytes(dir / "lm.ckpt");

  t.config.lm.epochs = 1;
  LmRun first;
  first.checkpoint = dir / "lm1.ckpt";
  run_lm_training(t.config, t.corpus, t.vocab, first);
  t.config.lm.epochs = 2;
  LmRun second;
  second.resume = load_checkpoint(dir / "lm1.ckpt");
  second.checkpoint = dir / "lm2.ckpt";
  run_lm_training(t.config, t.corpus, t.vocab, second);
  CHECK(bytes(dir / "lm2.ckpt") == two);

  const Vocabulary other = Vocabulary::from_content({"x"});
  CHECK_THROWS_AS(lm_from_checkpoint(load_checkpoint(dir / "lm.ckpt"), other.content_hash(), other.size()),
                  CompatibilityError);
}

TEST_CASE("reports list every system with scaled scores") {
  EvalReport r = evaluate_set({{{"a", "b"}, {"a", "b"}, {{"a", "b"}}}, {{"c"}, {"c"}, {{}}}});
  const std::string table = format_report_table({{"LEAD-8", r}});
  CHECK(table.find("LEAD-8") != std::string::npos);
  CHECK(table.find("100.00") != std::string::npos);
  CHECK(table.find("filtered (empty reference): 1") != std::string::npos);
  const auto j = nlohmann::json::parse(format_report_json({{"LEAD-8", r}}, "seed = 1\n"));
  CHECK(j.at("systems").at("LEAD-8").at("rouge1").at("f1").get<double>() == 1.0);
  CHECK(j.at("systems").at("LEAD-8").at("filtered").get<int>() == 1);
  CHECK(j.at("config") == "seed = 1\n");
}
