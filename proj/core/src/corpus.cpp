#include "simulst/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <string>

#include "simulst/error.hpp"
#include "simulst/rng.hpp"

namespace simulst {

namespace {

void validate_spec(const SyntheticTaskSpec& spec) {
  if (spec.vocab_size < 2) throw ConfigError("vocab_size must be >= 2");
  if (spec.length_range.first < 1) throw ConfigError("minimum length must be >= 1");
  if (spec.length_range.first > spec.length_range.second)
    throw ConfigError("length_range min > max");
  if (!(spec.noise_rate >= 0.0 && spec.noise_rate <= 1.0))
    throw ConfigError("noise_rate must lie in [0,1]");
  if (!(spec.src_tok_ms > 0.0)) throw ConfigError("src_tok_ms must be positive");
}

}  // namespace

void validate(const Utterance& u, std::size_t vocab_size) {
  if (u.source.empty()) throw ConfigError("utterance '" + u.id + "' has an empty source");
  if (u.target.empty()) throw ConfigError("utterance '" + u.id + "' has an empty target");
  if (!(u.src_tok_ms > 0.0))
    throw ConfigError("utterance '" + u.id + "' has non-positive src_tok_ms");
  if (u.oracle_alignment.size() != u.target.size())
    throw ConfigError("utterance '" + u.id + "' oracle_alignment length differs from target");
  std::size_t prev = 1;
  for (std::size_t i = 0; i < u.oracle_alignment.size(); ++i) {
    const std::size_t a = u.oracle_alignment[i];
    if (a < prev || a > u.source.size())
      throw ConfigError("utterance '" + u.id + "' oracle_alignment[" + std::to_string(i) +
                        "] = " + std::to_string(a) + " breaks monotonicity or bounds");
    prev = a;
  }
  if (vocab_size > 0) {
    auto out_of_vocab = [&](Token t) {
      return t < 0 || static_cast<std::size_t>(t) >= vocab_size;
    };
    if (std::any_of(u.source.begin(), u.source.end(), out_of_vocab) ||
        std::any_of(u.target.begin(), u.target.end(), out_of_vocab))
      throw ConfigError("utterance '" + u.id + "' has tokens outside the vocabulary");
  }
}

std::vector<Utterance> generate_corpus(const SyntheticTaskSpec& spec, std::size_t n,
                                       std::uint64_t seed) {
  validate_spec(spec);
  if (n < 1) throw ConfigError("generate_corpus requires n >= 1");

  std::mt19937_64 rng(splitmix64(seed));
  std::mt19937_64 align_rng(splitmix64(spec.alignment_seed ^ splitmix64(seed + 1)));
  std::uniform_int_distribution<std::size_t> len_dist(spec.length_range.first,
                                                      spec.length_range.second);
  std::uniform_int_distribution<Token> tok_dist(0, static_cast<Token>(spec.vocab_size - 1));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> jitter(1, 3);

  std::vector<Utterance> corpus;
  corpus.reserve(n);
  for (std::size_t u = 0; u < n; ++u) {
    Utterance utt;
    utt.id = "utt" + std::to_string(u);
    utt.src_tok_ms = spec.src_tok_ms;
    const std::size_t m = len_dist(rng);
    utt.source.resize(m);
    for (auto& t : utt.source) t = tok_dist(rng);

    auto& a = utt.oracle_alignment;
    switch (spec.alignment_kind) {
      case AlignmentKind::Identity:
        for (std::size_t i = 1; i <= m; ++i) a.push_back(i);
        break;
      case AlignmentKind::Shift:
        for (std::size_t i = 1; i <= m; ++i) a.push_back(std::min(i + spec.shift, m));
        break;
      case AlignmentKind::RandomMonotone: {
        const std::size_t tn = len_dist(align_rng);
        std::uniform_int_distribution<std::size_t> pos(1, m);
        for (std::size_t i = 0; i < tn; ++i) a.push_back(pos(align_rng));
        std::sort(a.begin(), a.end());
        break;
      }
    }
    if (spec.noise_rate > 0.0) {
      for (auto& ai : a)
        if (unit(rng) < spec.noise_rate) ai = std::min(ai + jitter(rng), m);
      for (std::size_t i = 1; i < a.size(); ++i) a[i] = std::max(a[i], a[i - 1]);
    }
    utt.target.reserve(a.size());
    for (std::size_t ai : a) utt.target.push_back(utt.source[ai - 1]);
    corpus.push_back(std::move(utt));
  }
  return corpus;
}

void to_json(nlohmann::json& j, const Utterance& u) {
  j = nlohmann::json{{"id", u.id},
                     {"source", u.source},
                     {"target", u.target},
                     {"oracle_alignment", u.oracle_alignment},
                     {"src_tok_ms", u.src_tok_ms}};
}

void from_json(const nlohmann::json& j, Utterance& u) {
  try {
    u.id = j.at("id").get<std::string>();
    u.source = j.at("source").get<std::vector<Token>>();
    u.target = j.at("target").get<std::vector<Token>>();
    u.oracle_alignment = j.at("oracle_alignment").get<std::vector<std::size_t>>();
    u.src_tok_ms = j.value("src_tok_ms", 280.0);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed utterance record: ") + e.what());
  }
}

void write_corpus(std::ostream& os, const std::vector<Utterance>& corpus) {
  for (const auto& u : corpus) os << nlohmann::json(u).dump() << '\n';
}

std::vector<Utterance> read_corpus(std::istream& is) {
  std::vector<Utterance> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      Utterance u = nlohmann::json::parse(line).get<Utterance>();
      validate(u);
      out.push_back(std::move(u));
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("corpus line " + std::to_string(lineno) + ": " + e.what());
    } catch (const ConfigError& e) {
      throw ConfigError("corpus line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

std::vector<Utterance> load_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open corpus file '" + path + "'");
  return read_corpus(in);
}

void save_corpus(const std::string& path, const std::vector<Utterance>& corpus) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write corpus file '" + path + "'");
  write_corpus(out, corpus);
}

AlignmentKind parse_alignment_kind(const std::string& name) {
  if (name == "identity") return AlignmentKind::Identity;
  if (name == "shift") return AlignmentKind::Shift;
  if (name == "random-monotone" || name == "random_monotone")
    return AlignmentKind::RandomMonotone;
  throw ConfigError("unknown alignment kind '" + name + "'");
}

std::string to_string(AlignmentKind kind) {
  switch (kind) {
    case AlignmentKind::Identity: return "identity";
    case AlignmentKind::Shift: return "shift";
    case AlignmentKind::RandomMonotone: return "random-monotone";
  }
  return "unknown";
}

}  // namespace simulst
