#include "simulst/batch.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <optional>
#include <thread>

#include "fmt/format.h"
#include "simulst/error.hpp"

namespace simulst {

void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn) {
  if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
  jobs = std::min(jobs, n);
  if (jobs <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first;
  std::mutex mu;
  auto work = [&] {
    for (;;) {
      const std::size_t i = next++;
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!first) first = std::current_exception();
        next = n;
      }
    }
  };
  std::vector<std::thread> threads;
  for (std::size_t t = 0; t < jobs; ++t) threads.emplace_back(work);
  for (auto& t : threads) t.join();
  if (first) std::rethrow_exception(first);
}

std::vector<SessionOutcome> run_corpus(const std::vector<Utterance>& corpus,
                                       const SessionConfig& config, std::size_t jobs) {
  validate(config);
  std::vector<SessionOutcome> out(corpus.size());
  parallel_for(corpus.size(), jobs, [&](std::size_t i) {
    auto& o = out[i];
    o.index = i;
    o.id = corpus[i].id;
    try {
      o.timeline = run_session(corpus[i], config);
      o.report = compute_report(o.timeline);
      o.ok = true;
    } catch (const Error& e) {
      o.error = e.what();
    }
  });
  return out;
}

Aggregate aggregate(const std::vector<LatencyReport>& reports, std::size_t failed) {
  Aggregate a;
  a.sessions = reports.size() + failed;
  a.failed = failed;
  if (reports.empty()) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    a.quality = a.al_ms = a.ca_al_ms = a.mean_delay_ms = a.discontinuity_ms = nan;
    return a;
  }
  for (const auto& r : reports) {
    a.quality += r.quality;
    a.al_ms += r.al_ms;
    a.ca_al_ms += r.ca_al_ms;
    a.mean_delay_ms += r.mean_delay_ms;
    a.discontinuity_ms += r.discontinuity_total_ms;
    a.num_output_tokens += r.num_output_tokens;
  }
  const auto n = static_cast<double>(reports.size());
  a.quality /= n;
  a.al_ms /= n;
  a.ca_al_ms /= n;
  a.mean_delay_ms /= n;
  a.discontinuity_ms /= n;
  return a;
}

Aggregate aggregate(const std::vector<SessionOutcome>& outcomes) {
  std::vector<LatencyReport> ok;
  std::size_t failed = 0;
  for (const auto& o : outcomes) {
    if (o.ok)
      ok.push_back(o.report);
    else
      ++failed;
  }
  return aggregate(ok, failed);
}

std::string csv_aggregate_row(const std::string& id, const Aggregate& a) {
  LatencyReport r;
  r.id = id;
  r.al_ms = a.al_ms;
  r.ca_al_ms = a.ca_al_ms;
  r.mean_delay_ms = a.mean_delay_ms;
  r.discontinuity_total_ms = a.discontinuity_ms;
  r.num_output_tokens = a.num_output_tokens;
  r.quality = a.quality;
  return csv_row(r);
}

SweepParam parse_sweep_param(const std::string& name) {
  if (name == "k") return SweepParam::K;
  if (name == "lambda") return SweepParam::Lambda;
  throw ConfigError("sweep parameter must be 'k' or 'lambda', got '" + name + "'");
}

std::vector<SweepRow> run_sweep(const std::vector<Utterance>& corpus, const SessionConfig& base,
                                SweepParam param, std::vector<double> values, std::size_t jobs) {
  if (values.empty()) throw ConfigError("sweep grid is empty");
  if (corpus.empty()) throw ConfigError("sweep corpus is empty");
  std::sort(values.begin(), values.end());
  std::vector<SessionConfig> points;
  for (double v : values) {
    SessionConfig c = base;
    if (param == SweepParam::K) {
      if (!(v >= 1.0) || v != std::floor(v)) throw ConfigError(fmt::format("k = {} is not a positive integer", v));
      c.policy.kind = PolicyKind::WaitK;
      c.policy.k = static_cast<std::size_t>(v);
    } else {
      c.policy.kind = PolicyKind::Vmma;
      c.policy.lambda = v;
    }
    validate(c);
    points.push_back(c);
  }
  // one task per (grid point, utterance); results land in fixed slots
  const std::size_t m = corpus.size();
  std::vector<std::optional<LatencyReport>> slots(points.size() * m);
  parallel_for(slots.size(), jobs, [&](std::size_t t) {
    try {
      slots[t] = compute_report(run_session(corpus[t % m], points[t / m]));
    } catch (const Error&) {
    }
  });
  std::vector<SweepRow> rows;
  for (std::size_t p = 0; p < points.size(); ++p) {
    std::vector<LatencyReport> ok;
    std::size_t failed = 0;
    for (std::size_t u = 0; u < m; ++u) {
      if (slots[p * m + u])
        ok.push_back(*slots[p * m + u]);
      else
        ++failed;
    }
    rows.push_back({values[p], aggregate(ok, failed)});
  }
  return rows;
}

std::string sweep_csv_header() { return "param,quality,al_ms,ca_al_ms,n_failed"; }

std::string sweep_csv_row(SweepParam param, const SweepRow& row) {
  const std::string p = param == SweepParam::K ? fmt::format("{}", static_cast<long long>(row.param))
                                               : fmt::format("{:g}", row.param);
  return fmt::format("{},{:.4f},{:.3f},{:.3f},{}", p, row.result.quality, row.result.al_ms,
                     row.result.ca_al_ms, row.result.failed);
}

}  // namespace simulst
