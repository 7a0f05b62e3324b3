#include "seq3/run_config.hpp"

#include <fstream>
#include <sstream>

#include "seq3/errors.hpp"

namespace seq3 {

RunConfig RunConfig::defaults(bool desk) {
  RunConfig c;
  if (desk) {
    c.lm = LmConfig::desk();
    c.model = Seq3Config::desk();
  }
  return c;
}

void RunConfig::bind(ConfigBinder& b) {
  b.bind(
      "seed", [this] { return seed ? std::to_string(*seed) : std::string(); },
      [this](const std::string& v) {
        if (v.empty()) {
          seed.reset();
          return;
        }
        std::size_t used = 0;
        unsigned long long x = 0;
        try {
          x = std::stoull(v, &used);
        } catch (const std::exception&) {
          used = 0;
        }
        if (used != v.size() || v.front() == '-') throw ParseError("seed: expected a nonnegative integer, got '" + v + "'");
        seed = x;
      });
  b.bind("vocab_cap", vocab_cap);
  lm.bind(b, "lm.");
  model.bind(b, "model.", "loss.");
  synthetic.bind(b, "synthetic.");
  b.bind("paths.corpus", paths.corpus);
  b.bind("paths.embeddings", paths.embeddings);
  b.bind("paths.vocab", paths.vocab);
  b.bind("paths.idf", paths.idf);
  b.bind("paths.lm", paths.lm);
  b.bind("paths.checkpoints", paths.checkpoints);
  b.bind("paths.output", paths.output);
}

void RunConfig::apply(const KeyValues& values) {
  ConfigBinder b;
  bind(b);
  b.set_all(values);
}

void RunConfig::validate() const {
  if (vocab_cap == 0) throw InputError("vocab_cap must be positive");
  lm.validate();
  model.validate();
  synthetic.validate();
}

std::uint64_t RunConfig::require_seed() const {
  if (!seed) throw InputError("no seed given: set 'seed' in the config file or pass --seed");
  return *seed;
}

std::string RunConfig::to_text() const {
  RunConfig copy = *this;
  ConfigBinder b;
  copy.bind(b);
  return format_key_values(b.values());
}

RunConfig RunConfig::resolve(bool desk, const std::optional<std::filesystem::path>& file, const KeyValues& overrides) {
  RunConfig c = defaults(desk);
  if (file) {
    std::ifstream in(*file);
    if (!in) throw InputError("cannot read config file '" + file->string() + "'");
    std::ostringstream text;
    text << in.rdbuf();
    c.apply(parse_key_values(text.str(), file->string()));
  }
  c.apply(overrides);
  c.validate();
  return c;
}

KeyValues parse_overrides(const std::vector<std::string>& assignments) {
  std::string text;
  for (const auto& a : assignments) {
    if (a.find('\n') != std::string::npos) throw ParseError("override '" + a + "' spans lines");
    text += a + "\n";
  }
  return parse_key_values(text, "--set");
}

}  // namespace seq3
