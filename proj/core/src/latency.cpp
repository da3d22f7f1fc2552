#include "simulst/latency.hpp"

#include <algorithm>
#include <cmath>

#include "fmt/format.h"
#include "simulst/error.hpp"

namespace simulst {

double average_lagging(const DelayProfile& profile, std::size_t tgt_len) {
  const auto& d = profile.delays_ms;
  if (d.empty()) throw MetricError("average_lagging: empty delay profile");
  if (!(profile.source_duration_ms > 0.0))
    throw MetricError("average_lagging: source duration must be positive");
  if (tgt_len == 0) throw MetricError("average_lagging: empty target");

  std::size_t tau = 0;
  if (profile.full_source_index && *profile.full_source_index > 0) {
    tau = *profile.full_source_index;
  } else {
    for (std::size_t i = 0; i < d.size(); ++i)
      if (d[i] >= profile.source_duration_ms) {
        tau = i + 1;
        break;
      }
  }
  if (tau == 0) tau = tgt_len;
  tau = std::min(tau, d.size());

  const double rate = profile.source_duration_ms / static_cast<double>(tgt_len);
  double sum = 0.0;
  for (std::size_t i = 0; i < tau; ++i) sum += d[i] - rate * static_cast<double>(i);
  return sum / static_cast<double>(tau);
}

DelayProfile expected_delays(const AlignmentMatrix& alpha, double per_source_ms) {
  DelayProfile p;
  p.source_duration_ms = per_source_ms * static_cast<double>(alpha.cols());
  p.delays_ms.reserve(alpha.rows());
  for (std::size_t i = 0; i < alpha.rows(); ++i) {
    double n_hat = 0.0;
    for (std::size_t j = 0; j < alpha.cols(); ++j)
      n_hat += static_cast<double>(j + 1) * alpha(i, j);
    p.delays_ms.push_back(per_source_ms * n_hat);
  }
  return p;
}

double latency_loss(const DelayProfile& expected, std::size_t tgt_len) {
  DelayProfile all = expected;
  all.full_source_index = expected.delays_ms.size();
  return average_lagging(all, tgt_len);
}

std::vector<TokenSpan> SyntheticAligner::align(const SessionTimeline& tl) const {
  std::vector<TokenSpan> spans(tl.hypothesis.size());
  std::vector<bool> seen(spans.size(), false);
  for (const auto& e : tl.events) {
    if (e.kind != EventKind::WriteUnit) continue;
    if (e.token >= spans.size()) throw MetricError("write_unit for unknown token");
    auto& s = spans[e.token];
    if (!seen[e.token]) {
      s.first_unit = e.unit_index;
      seen[e.token] = true;
    }
    s.last_unit = e.unit_index;
  }
  for (std::size_t i = 0; i < spans.size(); ++i) {
    if (!seen[i]) throw MetricError(fmt::format("token {} has no emitted units", i));
    spans[i].audio_start_ms = unit_ms_ * static_cast<double>(spans[i].first_unit);
    spans[i].audio_end_ms = unit_ms_ * static_cast<double>(spans[i].last_unit + 1);
  }
  return spans;
}

DelayProfile speech_delay_extraction(const SessionTimeline& tl, const TokenTimestamper& aligner,
                                     DelayVariant variant) {
  struct Call {
    std::size_t first, end;
    Micros sim, wall;
  };
  std::vector<Call> calls;
  for (const auto& e : tl.events)
    if (e.kind == EventKind::VocoderCall)
      calls.push_back({e.first_unit, e.first_unit + e.n_units, e.sim_us, e.wall_us});
  if (calls.empty()) throw MetricError("timeline has no emission events");

  DelayProfile p;
  p.variant = variant;
  p.source_duration_ms = us_to_ms(tl.source_duration_us());
  if (const std::size_t full = tl.full_source_token(); full > 0) p.full_source_index = full;

  const auto spans = aligner.align(tl);
  p.delays_ms.reserve(spans.size());
  for (std::size_t i = 0; i < spans.size(); ++i) {
    const std::size_t u = spans[i].last_unit;
    auto it = std::find_if(calls.begin(), calls.end(),
                           [u](const Call& c) { return u >= c.first && u < c.end; });
    if (it == calls.end())
      throw MetricError(fmt::format("unit {} of token {} was never synthesised", u, i));
    p.delays_ms.push_back(us_to_ms(variant == DelayVariant::Ideal ? it->sim : it->wall));
  }
  return p;
}

double max_field_diff(const LatencyReport& a, const LatencyReport& b) {
  return std::max({std::abs(a.al_ms - b.al_ms), std::abs(a.ca_al_ms - b.ca_al_ms),
                   std::abs(a.mean_delay_ms - b.mean_delay_ms),
                   std::abs(a.discontinuity_total_ms - b.discontinuity_total_ms),
                   std::abs(static_cast<double>(a.num_output_tokens) -
                            static_cast<double>(b.num_output_tokens)),
                   std::abs(a.quality - b.quality)});
}

void to_json(nlohmann::json& j, const LatencyReport& r) {
  j = nlohmann::json{{"id", r.id},
                     {"al_ms", r.al_ms},
                     {"ca_al_ms", r.ca_al_ms},
                     {"mean_delay_ms", r.mean_delay_ms},
                     {"discontinuity_total_ms", r.discontinuity_total_ms},
                     {"num_output_tokens", r.num_output_tokens},
                     {"quality", r.quality}};
}

void from_json(const nlohmann::json& j, LatencyReport& r) {
  r.id = j.at("id").get<std::string>();
  r.al_ms = j.at("al_ms").get<double>();
  r.ca_al_ms = j.at("ca_al_ms").get<double>();
  r.mean_delay_ms = j.at("mean_delay_ms").get<double>();
  r.discontinuity_total_ms = j.at("discontinuity_total_ms").get<double>();
  r.num_output_tokens = j.at("num_output_tokens").get<std::size_t>();
  r.quality = j.at("quality").get<double>();
}

std::string csv_header() { return "id,al_ms,ca_al_ms,mean_delay_ms,discont_ms,n_tokens,quality"; }

std::string csv_row(const LatencyReport& r) {
  return fmt::format("{},{:.3f},{:.3f},{:.3f},{:.3f},{},{:.4f}", r.id, r.al_ms, r.ca_al_ms,
                     r.mean_delay_ms, r.discontinuity_total_ms, r.num_output_tokens, r.quality);
}

}  // namespace simulst
