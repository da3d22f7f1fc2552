#include <numeric>

#include "simulst/bleu.hpp"
#include "simulst/error.hpp"
#include "simulst/session.hpp"

namespace simulst {

DiscontinuityReport discontinuity_report(const SessionTimeline& tl, Clock clock) {
  DiscontinuityReport r;
  bool first = true;
  Micros prev_end = 0;
  for (const auto& e : tl.events) {
    if (e.kind != EventKind::EmitAudio) continue;
    const Micros start = clock == Clock::Wall ? e.start_wall_us : e.start_sim_us;
    const Micros end = clock == Clock::Wall ? e.end_wall_us : e.end_sim_us;
    if (!first && start > prev_end) {
      const double gap = us_to_ms(start - prev_end);
      r.total_gap_ms += gap;
      ++r.gap_count;
      r.max_gap_ms = std::max(r.max_gap_ms, gap);
    }
    first = false;
    prev_end = end;
  }
  return r;
}

LatencyReport compute_report(const SessionTimeline& tl) {
  if (!tl.complete) throw MetricError("session '" + tl.session_id + "' is incomplete");
  const SyntheticAligner aligner(us_to_ms(tl.unit_us));
  const auto ideal = speech_delay_extraction(tl, aligner, DelayVariant::Ideal);
  const auto ca = speech_delay_extraction(tl, aligner, DelayVariant::ComputationAware);
  LatencyReport r;
  r.id = tl.session_id;
  r.num_output_tokens = tl.hypothesis.size();
  r.al_ms = average_lagging(ideal, r.num_output_tokens);
  r.ca_al_ms = average_lagging(ca, r.num_output_tokens);
  r.mean_delay_ms = std::accumulate(ideal.delays_ms.begin(), ideal.delays_ms.end(), 0.0) /
                    static_cast<double>(ideal.delays_ms.size());
  r.discontinuity_total_ms = discontinuity_report(tl, Clock::Wall).total_gap_ms;
  r.quality = quality_score(tl.hypothesis, tl.reference);
  return r;
}

}  // namespace simulst
