// Command-line front end: corpus generation, vocabulary building, LM
// pretraining, SEQ3 training, compression and ROUGE evaluation.

#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "seq3/errors.hpp"
#include "seq3/pipeline.hpp"
#include "seq3/rouge.hpp"
#include "seq3/run_config.hpp"
#include "seq3/synthetic.hpp"
#include "seq3/vocab.hpp"

namespace fs = std::filesystem;
using namespace seq3;

namespace {

// Flags every subcommand accepts.
struct Common {
  std::string config_file;
  std::optional<std::uint64_t> seed;
  bool desk = false;
  std::string out;
  std::vector<std::string> sets;
  std::map<std::string, std::string> flags;  // command flags that map onto config keys

  void add_to(CLI::App* cmd) {
    cmd->add_option("--config", config_file, "Config file of 'key = value' lines")->check(CLI::ExistingFile);
    cmd->add_option("--seed", seed, "Random seed (overrides the config file)");
    cmd->add_flag("--desk-profile", desk, "Start from the small desk-scale model sizes");
    cmd->add_option("--out", out, "Output path");
    cmd->add_option("--set", sets, "Config override KEY=VALUE (repeatable)");
  }

  // Adds an option whose value, when given, overrides config key `key`.
  CLI::Option* keyed(CLI::App* cmd, const std::string& name, const std::string& key, const std::string& help) {
    return cmd->add_option_function<std::string>(name, [this, key](const std::string& v) { flags[key] = v; }, help);
  }

  RunConfig resolve() const {
    KeyValues overrides = parse_overrides(sets);
    for (const auto& [k, v] : flags) overrides[k] = v;
    if (seed) overrides["seed"] = std::to_string(*seed);
    std::optional<fs::path> file;
    if (!config_file.empty()) file = config_file;
    return RunConfig::resolve(desk, file, overrides);
  }
};

std::string need(const std::string& value, const std::string& what) {
  if (value.empty()) throw InputError("missing " + what);
  return value;
}

fs::path existing(const std::string& path, const std::string& what) {
  need(path, what);
  if (!fs::exists(path)) throw InputError(what + " '" + path + "' does not exist");
  return path;
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  return out;
}

std::string join(const Sentence& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) out += (i ? " " : "") + tokens[i];
  return out;
}

std::vector<std::string> read_lines(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read '" + path.string() + "'");
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

// ---- gen-synthetic -----------------------------------------------------------

int gen_synthetic(const Common& common) {
  RunConfig cfg = common.resolve();
  SyntheticSpec spec = cfg.synthetic;
  spec.seed = cfg.require_seed();
  const fs::path dir = common.out.empty() ? fs::path(cfg.paths.output.empty() ? "." : cfg.paths.output) : fs::path(common.out);
  fs::create_directories(dir);
  auto corpus = open_out(dir / "corpus.txt");
  auto topics = open_out(dir / "topics.txt");
  for (const auto& ex : generate_synthetic(spec)) {
    corpus << join(ex.sentence) << '\n';
    topics << join(ex.topics) << '\n';
  }
  open_out(dir / "config.txt") << cfg.to_text();
  std::cout << "wrote " << spec.sentences << " sentences to " << (dir / "corpus.txt").string() << "\n";
  return 0;
}

// ---- build-vocab ---------------------------------------------------------------

int build_vocab(const Common& common) {
  RunConfig cfg = common.resolve();
  const auto corpus = read_corpus(existing(cfg.paths.corpus, "corpus (--corpus)"));
  if (corpus.empty()) throw InputError("corpus '" + cfg.paths.corpus + "' has no sentences");
  const Vocabulary vocab = Vocabulary::build(corpus, cfg.vocab_cap);
  const IdfTable idf = compute_idf(corpus, vocab);
  const fs::path dir = common.out.empty() ? fs::path(cfg.paths.output.empty() ? "." : cfg.paths.output) : fs::path(common.out);
  fs::create_directories(dir);
  vocab.save(dir / "vocab.txt");
  idf.save(dir / "idf.txt", vocab);
  std::cout << "vocabulary: " << vocab.content_size() << " words (+" << kNumReserved << " reserved), "
            << corpus.size() << " sentences -> " << dir.string() << "\n";
  return 0;
}

// ---- train-lm --------------------------------------------------------------------

int train_lm_cmd(const Common& common, const std::string& resume) {
  RunConfig cfg = common.resolve();
  const Vocabulary vocab = Vocabulary::load(existing(cfg.paths.vocab, "vocabulary (--vocab)"));
  const auto ids = encode_corpus(read_corpus(existing(cfg.paths.corpus, "corpus (--corpus)")), vocab);
  if (ids.empty()) throw InputError("corpus '" + cfg.paths.corpus + "' has no sentences");
  const fs::path out = common.out.empty() ? fs::path(need(cfg.paths.lm, "output checkpoint (--out)")) : fs::path(common.out);
  LmRun run;
  if (!resume.empty()) run.resume = load_checkpoint(existing(resume, "checkpoint (--resume)"));
  run.checkpoint = out;
  auto log = open_out(fs::path(out.string() + ".log.jsonl"));
  run.log = &log;
  run.progress = &std::cout;
  run_lm_training(cfg, ids, vocab, run);
  std::cout << "language model saved to " << out.string() << "\n";
  return 0;
}

// ---- train -----------------------------------------------------------------------

int train_cmd(const Common& common, const std::string& resume) {
  RunConfig cfg = common.resolve();
  const Vocabulary vocab = Vocabulary::load(existing(cfg.paths.vocab, "vocabulary (--vocab)"));
  const auto sentences = read_corpus(existing(cfg.paths.corpus, "corpus (--corpus)"));
  const auto ids = encode_corpus(sentences, vocab);
  if (ids.empty()) throw InputError("corpus '" + cfg.paths.corpus + "' has no sentences");
  const IdfTable idf = cfg.paths.idf.empty() ? compute_idf(sentences, vocab)
                                             : IdfTable::load(existing(cfg.paths.idf, "idf table (--idf)"), vocab);
  std::optional<LmModel> lm;
  if (cfg.model.loss.prior > 0.0)
    lm.emplace(lm_from_checkpoint(load_checkpoint(existing(cfg.paths.lm, "language model (--lm)")),
                                  vocab.content_hash(), vocab.size()));
  const fs::path dir =
      common.out.empty() ? fs::path(need(cfg.paths.checkpoints, "checkpoint directory (--out)")) : fs::path(common.out);
  Seq3Run run;
  run.checkpoint_dir = dir;
  if (!resume.empty()) run.resume = load_checkpoint(existing(resume, "checkpoint (--resume)"));
  if (!cfg.paths.embeddings.empty()) {
    Rng rng = stream_rng(cfg.require_seed(), Stream::ModelInit);
    auto loaded = load_pretrained_embeddings(existing(cfg.paths.embeddings, "embeddings"), vocab,
                                             cfg.model.embedding_dim, rng);
    std::cout << "pretrained embeddings: " << loaded.matched_rows << " of " << vocab.size() << " rows matched\n";
    run.embeddings = loaded.matrix;
  }
  fs::create_directories(dir);
  std::ofstream log(dir / "train_log.jsonl", run.resume ? std::ios::app : std::ios::trunc);
  if (!log) throw InputError("cannot write '" + (dir / "train_log.jsonl").string() + "'");
  run.log = &log;
  run.progress = &std::cout;
  if (cfg.model.loss.prior == 0.0) std::cout << "lambda_p = 0: training without the LM prior\n";
  if (cfg.model.loss.topic == 0.0) std::cout << "lambda_t = 0: training without the topic loss\n";
  run_seq3_training(cfg, ids, vocab, idf, lm ? &*lm : nullptr, run);
  std::cout << "checkpoints in " << dir.string() << "\n";
  return 0;
}

// ---- compress --------------------------------------------------------------------

int compress_cmd(const Common& common, const std::string& checkpoint, const std::string& input,
                 std::optional<double> ratio) {
  RunConfig cfg = common.resolve();
  const Vocabulary vocab = Vocabulary::load(existing(cfg.paths.vocab, "vocabulary (--vocab)"));
  const Checkpoint ck = load_checkpoint(existing(checkpoint, "checkpoint (--checkpoint)"));
  const Seq3Model model = seq3_from_checkpoint(ck, vocab.content_hash(), vocab.size());
  const double r = ratio.value_or(model.config().inference_ratio);
  const auto lines = read_lines(existing(input, "input (--input)"));
  std::ofstream file;
  std::ostream* out = &std::cout;
  if (!common.out.empty()) {
    file = open_out(common.out);
    out = &file;
  }
  for (const auto& line : lines) {
    const Sentence s = split_tokens(line);
    *out << (s.empty() ? std::string() : join(compress(model, vocab, s, r))) << '\n';
  }
  return 0;
}

// ---- evaluate --------------------------------------------------------------------

struct EvalArgs {
  std::string candidates;
  std::vector<std::string> references;
  std::string sources;
  std::string tsv;
  std::vector<std::string> baselines;
  bool no_stem = false;
  std::size_t truncate_bytes = 0;
  std::size_t lead_n = 8;
};

int evaluate_cmd(const Common& common, const EvalArgs& a) {
  RunConfig cfg = common.resolve();
  std::vector<Sentence> candidates, sources;
  std::vector<std::vector<Sentence>> references;
  if (!a.tsv.empty()) {
    // candidate \t reference [\t reference ...]
    for (const auto& line : read_lines(existing(a.tsv, "tsv file (--tsv)"))) {
      std::vector<std::string> cols;
      std::stringstream ss(line);
      for (std::string col; std::getline(ss, col, '\t');) cols.push_back(col);
      if (cols.empty()) cols.emplace_back();
      candidates.push_back(split_tokens(cols[0]));
      std::vector<Sentence> refs;
      for (std::size_t i = 1; i < cols.size(); ++i) refs.push_back(split_tokens(cols[i]));
      references.push_back(refs);
    }
  } else {
    if (a.references.empty()) throw InputError("missing references (--references)");
    std::vector<std::vector<std::string>> ref_lines;
    for (const auto& r : a.references) ref_lines.push_back(read_lines(existing(r, "references")));
    const std::size_t n = ref_lines.front().size();
    for (const auto& r : ref_lines)
      if (r.size() != n) throw InputError("reference files differ in line count");
    references.assign(n, {});
    for (std::size_t i = 0; i < n; ++i)
      for (const auto& r : ref_lines) references[i].push_back(split_tokens(r[i]));
    if (!a.candidates.empty()) {
      for (const auto& line : read_lines(existing(a.candidates, "candidates (--candidates)")))
        candidates.push_back(split_tokens(line));
      if (candidates.size() != n)
        throw InputError("candidates have " + std::to_string(candidates.size()) + " lines, references " +
                         std::to_string(n));
    }
  }
  if (!a.sources.empty()) {
    for (const auto& line : read_lines(existing(a.sources, "sources (--sources)"))) sources.push_back(split_tokens(line));
    if (sources.size() != references.size()) throw InputError("sources and references differ in line count");
  }
  auto cap = [&](Sentence s) { return a.truncate_bytes ? prefix_baseline(s, a.truncate_bytes) : s; };
  auto score = [&](const std::string& name, const std::vector<Sentence>& system) {
    std::vector<EvalExample> examples(references.size());
    for (std::size_t i = 0; i < examples.size(); ++i) {
      examples[i].candidate = cap(system[i]);
      examples[i].references = references[i];
    }
    return SystemScores{name, evaluate_set(examples, !a.no_stem)};
  };

  std::vector<SystemScores> systems;
  if (!candidates.empty()) systems.push_back(score("candidates", candidates));
  std::size_t warned = 0;
  for (const auto& b : a.baselines) {
    if (sources.empty()) throw InputError("baseline '" + b + "' needs --sources");
    std::vector<Sentence> sys;
    for (const auto& s : sources) {
      if (b == "lead") {
        sys.push_back(lead_n_baseline(s, a.lead_n));
      } else if (b == "prefix") {
        bool warn = false;
        sys.push_back(prefix_baseline(s, 75, &warn));
        warned += warn;
      } else {
        throw InputError("unknown baseline '" + b + "' (expected lead or prefix)");
      }
    }
    systems.push_back(score(b == "lead" ? "lead-" + std::to_string(a.lead_n) : "prefix-75", sys));
  }
  if (systems.empty()) throw InputError("nothing to evaluate: give --candidates and/or --baselines");
  if (warned) std::cerr << "warning: " << warned << " sources start with a token longer than 75 bytes\n";
  std::cout << format_report_table(systems);
  if (!common.out.empty()) open_out(common.out) << format_report_json(systems, cfg.to_text()) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Unsupervised sentence compression with a discrete word autoencoder"};
  app.require_subcommand(1);

  Common gen_c, vocab_c, lm_c, train_c, comp_c, eval_c;
  auto* gen = app.add_subcommand("gen-synthetic", "Write a synthetic corpus and its topic-word references");
  gen_c.add_to(gen);

  auto* voc = app.add_subcommand("build-vocab", "Build the vocabulary and idf table of a corpus");
  vocab_c.add_to(voc);
  vocab_c.keyed(voc, "--corpus", "paths.corpus", "Tokenized corpus, one sentence per line");
  vocab_c.keyed(voc, "--cap", "vocab_cap", "Vocabulary size cap (default 15000)");

  std::string lm_resume;
  auto* lmc = app.add_subcommand("train-lm", "Pretrain the language-model prior");
  lm_c.add_to(lmc);
  lm_c.keyed(lmc, "--corpus", "paths.corpus", "Training corpus");
  lm_c.keyed(lmc, "--vocab", "paths.vocab", "Vocabulary file");
  lmc->add_option("--resume", lm_resume, "Continue from an LM checkpoint");

  std::string train_resume;
  auto* tr = app.add_subcommand("train", "Train the compressor/reconstructor");
  train_c.add_to(tr);
  train_c.keyed(tr, "--corpus", "paths.corpus", "Training corpus");
  train_c.keyed(tr, "--vocab", "paths.vocab", "Vocabulary file");
  train_c.keyed(tr, "--idf", "paths.idf", "Idf table (computed from the corpus if absent)");
  train_c.keyed(tr, "--lm", "paths.lm", "Pretrained LM checkpoint");
  train_c.keyed(tr, "--embeddings", "paths.embeddings", "GloVe-format embeddings");
  tr->add_option("--resume", train_resume, "Continue from a SEQ3 checkpoint");

  std::string checkpoint, input;
  std::optional<double> ratio;
  auto* cmp = app.add_subcommand("compress", "Summarize each line of a file");
  comp_c.add_to(cmp);
  comp_c.keyed(cmp, "--vocab", "paths.vocab", "Vocabulary file");
  cmp->add_option("--checkpoint", checkpoint, "SEQ3 checkpoint")->required();
  cmp->add_option("--input", input, "Tokenized input, one sentence per line")->required();
  cmp->add_option("--ratio", ratio, "Summary length as a fraction of the input (default 0.5)");

  EvalArgs eval_args;
  auto* ev = app.add_subcommand("evaluate", "ROUGE-1/2/L F1 of summaries and baselines");
  eval_c.add_to(ev);
  ev->add_option("--candidates", eval_args.candidates, "System summaries, one per line");
  ev->add_option("--references", eval_args.references, "Reference file(s), one summary per line")->expected(1, -1);
  ev->add_option("--tsv", eval_args.tsv, "Single file: candidate<TAB>reference[<TAB>reference...]");
  ev->add_option("--sources", eval_args.sources, "Source sentences, needed for baselines");
  ev->add_option("--baselines", eval_args.baselines, "Baselines to score: lead, prefix")->delimiter(',');
  ev->add_option("--lead-n", eval_args.lead_n, "Words kept by the lead baseline (default 8)");
  ev->add_flag("--no-stem", eval_args.no_stem, "Disable Porter stemming");
  ev->add_option("--truncate-bytes", eval_args.truncate_bytes, "Cap every summary at this many bytes (0: off)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (gen->parsed()) return gen_synthetic(gen_c);
    if (voc->parsed()) return build_vocab(vocab_c);
    if (lmc->parsed()) return train_lm_cmd(lm_c, lm_resume);
    if (tr->parsed()) return train_cmd(train_c, train_resume);
    if (cmp->parsed()) return compress_cmd(comp_c, checkpoint, input, ratio);
    if (ev->parsed()) return evaluate_cmd(eval_c, eval_args);
  } catch (const std::exception& e) {
    std::string msg = e.what();
    for (char& c : msg)
      if (c == '\n') c = ' ';
    std::cerr << "seq3: error: " << msg << "\n";
    return 1;
  }
  return 1;
}
