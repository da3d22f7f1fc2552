#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "simulst/matrix.hpp"
#include "simulst/timeline.hpp"

namespace simulst {

enum class DelayVariant { Ideal, ComputationAware };

/// Per-output-token delays d(y_i) in milliseconds.
struct DelayProfile {
  std::vector<double> delays_ms;
  double source_duration_ms = 0.0;
  DelayVariant variant = DelayVariant::Ideal;
  /// 1-based index of the first token produced after the full source was
  /// consumed, when known from a session log.
  std::optional<std::size_t> full_source_index;
};

/// Average lagging. tau comes from `full_source_index` when present, else the
/// first i with d_i >= T_X, else |Y|. Throws MetricError on empty input.
double average_lagging(const DelayProfile& profile, std::size_t tgt_len);

/// d_i = per_source_ms * sum_j j * alpha[i][j].
DelayProfile expected_delays(const AlignmentMatrix& alpha, double per_source_ms);

/// Differentiable AL: the lagging sum with tau fixed to |Y|.
double latency_loss(const DelayProfile& expected, std::size_t tgt_len);

struct TokenSpan {
  std::size_t first_unit = 0;
  std::size_t last_unit = 0;
  double audio_start_ms = 0.0;  // offset inside the concatenated output audio
  double audio_end_ms = 0.0;
};

/// Locates each target token inside the emitted unit stream.
class TokenTimestamper {
 public:
  virtual ~TokenTimestamper() = default;
  virtual std::vector<TokenSpan> align(const SessionTimeline& tl) const = 0;
};

/// Uses the write_unit records directly and spaces units `unit_ms` apart in
/// the output audio.
class SyntheticAligner final : public TokenTimestamper {
 public:
  explicit SyntheticAligner(double unit_ms = 20.0) : unit_ms_(unit_ms) {}
  std::vector<TokenSpan> align(const SessionTimeline& tl) const override;

 private:
  double unit_ms_;
};

/// d(y_i) = time of the vocoder call that synthesised token i's final unit
/// (sim clock for Ideal, completion on the wall clock for ComputationAware).
/// Throws MetricError if a token's unit was never synthesised.
DelayProfile speech_delay_extraction(const SessionTimeline& tl, const TokenTimestamper& aligner,
                                     DelayVariant variant = DelayVariant::Ideal);

struct LatencyReport {
  std::string id;
  double al_ms = 0.0;
  double ca_al_ms = 0.0;
  double mean_delay_ms = 0.0;
  double discontinuity_total_ms = 0.0;
  std::size_t num_output_tokens = 0;
  double quality = 0.0;

  friend bool operator==(const LatencyReport&, const LatencyReport&) = default;
};

/// Largest per-field absolute difference between two reports (ms or BLEU).
double max_field_diff(const LatencyReport& a, const LatencyReport& b);

void to_json(nlohmann::json& j, const LatencyReport& r);
void from_json(const nlohmann::json& j, LatencyReport& r);

/// CSV columns: id,al_ms,ca_al_ms,mean_delay_ms,discont_ms,n_tokens,quality
std::string csv_header();
std::string csv_row(const LatencyReport& r);

}  // namespace simulst
