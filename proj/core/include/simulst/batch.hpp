#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "simulst/corpus.hpp"
#include "simulst/latency.hpp"
#include "simulst/session.hpp"

namespace simulst {

/// Calls fn(i) for i in [0, n) on up to `jobs` threads (0: hardware
/// concurrency). The first exception is rethrown after all threads stop.
void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn);

struct SessionOutcome {
  std::size_t index = 0;
  std::string id;
  bool ok = false;
  std::string error;
  LatencyReport report;
  SessionTimeline timeline;
};

/// One in-process session per utterance; outcomes in corpus order.
std::vector<SessionOutcome> run_corpus(const std::vector<Utterance>& corpus,
                                       const SessionConfig& config, std::size_t jobs = 1);

struct Aggregate {
  std::size_t sessions = 0;  // attempted, including failures
  std::size_t failed = 0;
  double quality = 0.0;  // mean per-session BLEU
  double al_ms = 0.0;
  double ca_al_ms = 0.0;
  double mean_delay_ms = 0.0;
  double discontinuity_ms = 0.0;
  std::size_t num_output_tokens = 0;  // total
};

/// Means over the successful sessions; NaN fields when none succeeded.
Aggregate aggregate(const std::vector<LatencyReport>& reports, std::size_t failed = 0);
Aggregate aggregate(const std::vector<SessionOutcome>& outcomes);

/// Aggregate as a LatencyReport-shaped CSV row with the given id.
std::string csv_aggregate_row(const std::string& id, const Aggregate& a);

enum class SweepParam { K, Lambda };

SweepParam parse_sweep_param(const std::string& name);

struct SweepRow {
  double param = 0.0;
  Aggregate result;
};

/// Runs the corpus at every grid point; rows sorted by parameter value.
/// Throws ConfigError on an empty grid.
std::vector<SweepRow> run_sweep(const std::vector<Utterance>& corpus, const SessionConfig& base,
                                SweepParam param, std::vector<double> values, std::size_t jobs = 1);

/// Columns: param,quality,al_ms,ca_al_ms,n_failed
std::string sweep_csv_header();
std::string sweep_csv_row(SweepParam param, const SweepRow& row);

}  // namespace simulst
