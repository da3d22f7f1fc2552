#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "simulst/corpus.hpp"
#include "simulst/latency.hpp"
#include "simulst/timeline.hpp"
#include "simulst/trace.hpp"

namespace simulst {

enum class PolicyKind { WaitK, Vmma, Offline };

/// Source of the context score a V-MMA agent feeds its change sampler.
enum class ScorerKind { Oracle, Diagonal, Label, Constant };

struct PolicySpec {
  PolicyKind kind = PolicyKind::WaitK;
  std::size_t k = 3;
  double lambda = 0.5;
  ScorerKind scorer = ScorerKind::Oracle;
  double sharpness = 4.0;  // Diagonal
  double constant = 0.5;   // Constant
  std::size_t rank_threshold = 1;  // Label
  std::uint64_t seed = 0;

  /// Short identifier without commas, usable as a CSV field.
  std::string label() const;
};

enum class ComputeKind { FixedCost, MeasuredWallclock };

struct ComputeModel {
  ComputeKind kind = ComputeKind::FixedCost;
  double per_decision_ms = 0.0;
  double per_unit_ms = 0.0;
};

inline constexpr std::size_t kEmitAtEnd = std::numeric_limits<std::size_t>::max();

struct SessionConfig {
  PolicySpec policy;
  /// Segment duration; 0 means "use the utterance's src_tok_ms".
  double pre_decision_ms = 0.0;
  /// Units accumulated per vocoder call; kEmitAtEnd synthesises once at the end.
  std::size_t emission_rate = 1;
  double unit_ms = 20.0;
  std::size_t units_per_token = 5;
  ComputeModel compute;
  /// Sleep until segments arrive instead of advancing a virtual clock.
  bool realtime = false;
  /// Real seconds per simulated second in realtime mode.
  double time_scale = 1.0;
  std::size_t vocab_size = 0;  // 0: infer from the utterance

  Micros segment_us(const Utterance& utt) const;
};

/// Throws ConfigError on non-positive durations, l == 0, k == 0, ...
void validate(const SessionConfig& config);

void to_json(nlohmann::json& j, const SessionConfig& c);
void from_json(const nlohmann::json& j, SessionConfig& c);

struct AgentState {
  std::size_t written = 0;
  std::size_t read = 0;
  std::size_t tgt_len = 0;
  bool source_finished = false;
};

/// READ/WRITE agent. Called once per decision until `tgt_len` tokens exist.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual Action decide(const AgentState& state) = 0;
};

class WaitKPolicy final : public Policy {
 public:
  explicit WaitKPolicy(std::size_t k);
  Action decide(const AgentState& s) override;

 private:
  std::size_t k_;
};

class OfflinePolicy final : public Policy {
 public:
  Action decide(const AgentState& s) override;
};

class PolicyScorer;
class ChangeProcess;

class VmmaPolicy final : public Policy {
 public:
  VmmaPolicy(std::unique_ptr<PolicyScorer> scorer, double lambda, std::uint64_t seed);
  ~VmmaPolicy() override;
  Action decide(const AgentState& s) override;

 private:
  std::unique_ptr<PolicyScorer> scorer_;
  std::unique_ptr<ChangeProcess> process_;
  Action prev_ = Action::Read;
};

/// Deterministic per-session seed derived from the policy seed and utterance id.
std::uint64_t session_seed(const PolicySpec& spec, const Utterance& utt);

std::unique_ptr<Policy> make_policy(const PolicySpec& spec, const Utterance& utt,
                                    std::size_t vocab_size = 0);

/// Stand-in for the translation model: predicts target token `index` from a
/// source prefix of `read` segments.
class Translator {
 public:
  virtual ~Translator() = default;
  virtual Token predict(std::size_t index, std::size_t read) = 0;
};

/// Exact once the prefix covers the token's oracle alignment; before that a
/// deterministic wrong guess.
class OracleTranslator final : public Translator {
 public:
  OracleTranslator(const Utterance& utt, std::size_t vocab_size = 0);
  Token predict(std::size_t index, std::size_t read) override;

 private:
  std::vector<Token> target_;
  std::vector<std::size_t> need_;
  std::size_t vocab_;
};

/// Discrete units -> audio. Returns the audio duration in milliseconds.
class Vocoder {
 public:
  virtual ~Vocoder() = default;
  virtual double synthesize(std::span<const std::int64_t> units) = 0;
};

class StubVocoder final : public Vocoder {
 public:
  explicit StubVocoder(double unit_ms) : unit_ms_(unit_ms) {}
  double synthesize(std::span<const std::int64_t> units) override;

 private:
  double unit_ms_;
  std::uint64_t sink_ = 0;
};

/// Unit id for unit `u` of a token; invertible by `unit_token`.
inline std::int64_t unit_id(Token token, std::size_t u, std::size_t units_per_token) {
  return static_cast<std::int64_t>(token) * static_cast<std::int64_t>(units_per_token) +
         static_cast<std::int64_t>(u);
}
inline Token unit_token(std::int64_t unit, std::size_t units_per_token) {
  return static_cast<Token>(unit / static_cast<std::int64_t>(units_per_token));
}

struct Segment {
  std::size_t index = 0;  // 1-based
  std::vector<Token> tokens;
  Micros arrival_us = 0;
  bool last = false;
};

/// Where segments come from. `fetch` may block until the segment exists;
/// nullopt means the source is over (EOS_SRC).
class SourceChannel {
 public:
  virtual ~SourceChannel() = default;
  virtual std::optional<Segment> fetch(std::size_t index) = 0;
};

/// Streams the utterance's own tokens; segment s arrives at s * segment_us.
class LocalSource final : public SourceChannel {
 public:
  LocalSource(const Utterance& utt, Micros segment_us, bool realtime = false,
              double time_scale = 1.0);
  std::optional<Segment> fetch(std::size_t index) override;

 private:
  const Utterance& utt_;
  Micros segment_us_;
  bool realtime_;
  double time_scale_;
  std::int64_t start_ns_;
};

/// Observer for emitted units; the network client forwards them as WRITEs.
class UnitSink {
 public:
  virtual ~UnitSink() = default;
  virtual void on_read(std::size_t segment, Micros arrival_us, Micros sim_us, Micros wall_us) = 0;
  virtual void on_unit(std::size_t token_index, std::int64_t unit, std::size_t unit_index,
                       Micros sim_us, Micros wall_us, std::optional<Micros> vocoder_done_us) = 0;
  /// `flush_done_us`: completion of the final partial vocoder batch, if any.
  virtual void on_finish(Micros sim_us, Micros wall_us, std::optional<Micros> flush_done_us) = 0;
};

/// The agent loop shared by in-process runs and the network client.
SessionTimeline run_agent_loop(const Utterance& utt, const SessionConfig& config,
                               Policy& agent, Translator& translator, Vocoder& vocoder,
                               SourceChannel& source, UnitSink* sink = nullptr);

/// In-process session with the utterance as its own source.
SessionTimeline run_session(const Utterance& utt, const SessionConfig& config, Policy& agent);
SessionTimeline run_session(const Utterance& utt, const SessionConfig& config);

struct DiscontinuityReport {
  double total_gap_ms = 0.0;
  std::size_t gap_count = 0;
  double max_gap_ms = 0.0;
};

enum class Clock { Sim, Wall };

/// Idle intervals between consecutive emitted audio spans.
DiscontinuityReport discontinuity_report(const SessionTimeline& tl, Clock clock = Clock::Wall);

/// AL / CA-AL / discontinuity / quality for one finished session.
LatencyReport compute_report(const SessionTimeline& tl);

}  // namespace simulst
