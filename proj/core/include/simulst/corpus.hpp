#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

namespace simulst {

using Token = std::int32_t;

/// One synthetic translation pair. Each source token stands for one
/// pre-decision speech segment of `src_tok_ms` milliseconds.
struct Utterance {
  std::string id;
  std::vector<Token> source;
  std::vector<Token> target;
  double src_tok_ms = 280.0;
  /// a*(i): 1-based source prefix length target i depends on; non-decreasing.
  std::vector<std::size_t> oracle_alignment;

  std::size_t source_len() const noexcept { return source.size(); }
  std::size_t target_len() const noexcept { return target.size(); }
  double source_duration_ms() const noexcept {
    return src_tok_ms * static_cast<double>(source.size());
  }

  friend bool operator==(const Utterance&, const Utterance&) = default;
};

/// Throws ConfigError naming the violated invariant.
void validate(const Utterance& u, std::size_t vocab_size = 0);

enum class AlignmentKind { Identity, Shift, RandomMonotone };

struct SyntheticTaskSpec {
  std::size_t vocab_size = 32;
  std::pair<std::size_t, std::size_t> length_range{8, 16};
  AlignmentKind alignment_kind = AlignmentKind::Identity;
  std::size_t shift = 0;              // used by Shift
  std::uint64_t alignment_seed = 0;   // used by RandomMonotone
  double noise_rate = 0.0;            // chance a token needs 1..3 extra segments
  double src_tok_ms = 280.0;
};

/// Pure function of (spec, n, seed). Throws ConfigError on invalid spec.
std::vector<Utterance> generate_corpus(const SyntheticTaskSpec& spec, std::size_t n,
                                       std::uint64_t seed);

void to_json(nlohmann::json& j, const Utterance& u);
void from_json(const nlohmann::json& j, Utterance& u);

/// JSON-lines: one utterance per line.
void write_corpus(std::ostream& os, const std::vector<Utterance>& corpus);
std::vector<Utterance> read_corpus(std::istream& is);
std::vector<Utterance> load_corpus(const std::string& path);
void save_corpus(const std::string& path, const std::vector<Utterance>& corpus);

AlignmentKind parse_alignment_kind(const std::string& name);
std::string to_string(AlignmentKind kind);

}  // namespace simulst
