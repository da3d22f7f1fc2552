#include "simulst/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <random>

#include "fmt/format.h"
#include "simulst/attnmath.hpp"
#include "simulst/distill.hpp"
#include "simulst/error.hpp"
#include "simulst/latency.hpp"
#include "simulst/session.hpp"
#include "simulst/vmma.hpp"

namespace simulst::verify {

StepwiseProbMatrix saturated_gate_matrix(std::uint64_t seed, std::size_t n, std::size_t m) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> low(0.005, 0.02), moderate(0.2, 0.45);
  Matrix p(n, m);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) p(i, j) = low(rng);
  const double saturated = std::numeric_limits<double>::denorm_min();
  for (std::size_t j = 0; j + 1 < m; ++j) p(0, j) = j % 2 == 0 ? moderate(rng) : saturated;
  return StepwiseProbMatrix::with_terminal_column(std::move(p));
}

StepwiseProbMatrix random_stepwise(std::uint64_t seed, std::size_t n, std::size_t m) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Matrix p(n, m);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      const double u = unit(rng);
      // mix of uniform gates and log-uniform small gates
      p(i, j) = u < 0.5 ? std::max(unit(rng), 1e-6) : std::exp(-8.0 * unit(rng));
    }
  return StepwiseProbMatrix::with_terminal_column(std::move(p));
}

SyntheticTaskSpec trend_task_spec() {
  SyntheticTaskSpec s;
  s.vocab_size = 64;
  s.length_range = {10, 20};
  s.alignment_kind = AlignmentKind::RandomMonotone;
  s.alignment_seed = 7;
  s.noise_rate = 0.3;
  return s;
}

namespace {

using Check = std::function<std::string()>;  // empty string: pass

std::string suite_identity() {
  SyntheticTaskSpec spec;
  const auto corpus = generate_corpus(spec, 5, 1);
  SessionConfig cfg;
  cfg.policy.kind = PolicyKind::WaitK;
  cfg.policy.k = 1;
  for (const auto& u : corpus) {
    const auto r = compute_report(run_session(u, cfg));
    if (std::abs(r.quality - 100.0) > 1e-9) return fmt::format("{}: quality {}", u.id, r.quality);
    if (std::abs(r.al_ms - u.src_tok_ms) > 1e-6) return fmt::format("{}: AL {}", u.id, r.al_ms);
  }
  return {};
}

std::string suite_alignment_oracle() {
  double worst = 0.0;
  for (std::uint64_t s = 0; s < 1000; ++s) {
    const std::size_t n = 1 + s % 6, m = 1 + (s / 6) % 6;
    const auto p = random_stepwise(s, n, m);
    worst = std::max(worst, max_abs_diff(expected_alignment_stable(p), enumerate_alignment_oracle(p)));
  }
  return worst < 1e-9 ? std::string{} : fmt::format("max error {:.3e}", worst);
}

std::string suite_instability() {
  const auto p = saturated_gate_matrix(kInstabilitySeed);
  const auto div = expected_alignment_div(p);
  const auto st = expected_alignment_stable(p);
  const double peak = div.max_abs();
  if (!(peak > 10.0) && std::isfinite(peak)) return fmt::format("division form peak {}", peak);
  for (std::size_t i = 0; i < st.rows(); ++i) {
    for (double v : st.row(i))
      if (!(v >= 0.0 && v <= 1.0)) return "stable form left [0,1]";
    if (std::abs(st.row_sum(i) - 1.0) > 1e-9) return fmt::format("stable row {} sum", i);
  }
  return {};
}

std::string suite_milk() {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> energy(0.0, 3.0);
  double worst = 0.0, worst_sum = 0.0;
  for (int t = 0; t < 100; ++t) {
    const auto alpha = expected_alignment_stable(random_stepwise(1000 + t, 5, 5));
    Matrix u(5, 5);
    for (std::size_t i = 0; i < 5; ++i)
      for (std::size_t j = 0; j < 5; ++j) u(i, j) = energy(rng);
    const auto beta = milk_soft_attention(alpha, EnergyMatrix(u));
    worst = std::max(worst, max_abs_diff(beta, oracle::milk_naive(alpha, EnergyMatrix(u))));
    for (std::size_t i = 0; i < 5; ++i) worst_sum = std::max(worst_sum, std::abs(beta.row_sum(i) - 1.0));
  }
  if (worst >= 1e-12) return fmt::format("max error {:.3e}", worst);
  if (worst_sum > 1e-9) return fmt::format("row sum error {:.3e}", worst_sum);
  return {};
}

std::string suite_average_lagging() {
  auto al = [](std::vector<double> d, double tx) {
    DelayProfile p;
    p.delays_ms = d;
    p.source_duration_ms = tx;
    return average_lagging(p, d.size());
  };
  if (al({3000, 3000, 3000}, 3000) != 3000.0) return "offline";
  if (al({1000, 2000, 3000}, 3000) != 1000.0) return "wait-1";
  if (al({2000, 3000, 4000, 4000}, 4000) != 2000.0) return "wait-2";
  for (std::size_t m = 1; m <= 8; ++m)
    for (std::size_t k = 1; k <= m; ++k) {
      std::vector<double> d(m);
      for (std::size_t i = 1; i <= m; ++i)
        d[i - 1] = 1000.0 * static_cast<double>(waitk_width(k, i, m));
      if (std::abs(al(d, 1000.0 * static_cast<double>(m)) - 1000.0 * static_cast<double>(k)) > 1e-9)
        return fmt::format("wait-{} on M={}", k, m);
    }
  return {};
}

std::string suite_vmma() {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> unit(0.05, 0.95);
  for (int t = 0; t < 20; ++t) {
    Matrix phi(3, 3), omega(3, 3), ll(3, 3);
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 3; ++j) {
        phi(i, j) = unit(rng);
        omega(i, j) = unit(rng);
        ll(i, j) = std::log(unit(rng));
      }
    const PolicyProbTable q(phi, TableRole::Posterior), p(omega, TableRole::Prior);
    Utterance u;
    u.id = "v";
    u.source = {0, 1, 2};
    u.target = {0, 1, 2};
    u.oracle_alignment = {1, 2, 3};
    const auto like = tabular_likelihood(ll);
    for (const auto& tr : enumerate_traces(3, 3, 1000))
      if (path_log_ratio(tr, q, q).value != 0.0) return "path_log_ratio(phi, phi) != 0";
    const double elbo = oracle::exact_elbo(u, like, q, p);
    const double marg = oracle::exact_log_marginal(u, like, p);
    if (elbo > marg + 1e-9) return fmt::format("ELBO {} above log-marginal {}", elbo, marg);
  }
  return {};
}

std::string suite_distill() {
  SyntheticTaskSpec spec;
  spec.alignment_kind = AlignmentKind::RandomMonotone;
  spec.noise_rate = 0.2;
  const auto corpus = generate_corpus(spec, 100, 3);
  for (const auto& u : corpus) {
    const std::size_t m = u.source_len();
    std::vector<std::size_t> probes;
    for (std::size_t L = 2; L < m; L += 3) probes.push_back(L);
    probes.push_back(m);
    const SyntheticRankOracle oracle(u, spec.vocab_size);
    const auto table = extract_offline_policy(oracle, probes, 1, u.target_len());
    for (std::size_t j = 0; j < u.target_len(); ++j) {
      const auto want = *std::lower_bound(probes.begin(), probes.end(), u.oracle_alignment[j]);
      if (table.prefix_lengths[j] != want) return fmt::format("{} token {}", u.id, j);
    }
  }
  return {};
}

std::string suite_harness() {
  const auto corpus = generate_corpus(SyntheticTaskSpec{}, 20, 9);
  SessionConfig cfg;
  cfg.policy.k = 3;
  cfg.compute.per_decision_ms = 5.0;
  cfg.compute.per_unit_ms = 1.0;
  for (const auto& u : corpus) {
    double audio = -1.0;
    for (std::size_t l : {std::size_t{1}, std::size_t{5}, kEmitAtEnd}) {
      cfg.emission_rate = l;
      const auto tl = run_session(u, cfg);
      const auto r = compute_report(tl);
      if (r.ca_al_ms < r.al_ms) return fmt::format("{}: CA-AL below AL", u.id);
      double total = 0.0;
      for (const auto& e : tl.events)
        if (e.kind == EventKind::EmitAudio) total += us_to_ms(e.end_sim_us - e.start_sim_us);
      if (audio >= 0.0 && std::abs(total - audio) > 1e-9) return fmt::format("{}: audio not conserved", u.id);
      audio = total;
    }
  }
  return {};
}

const std::vector<std::pair<std::string, Check>>& registry() {
  static const std::vector<std::pair<std::string, Check>> suites = {
      {"identity_case", suite_identity},
      {"alignment_oracle_1000", suite_alignment_oracle},
      {"instability_witness", suite_instability},
      {"milk_naive_100", suite_milk},
      {"average_lagging_examples", suite_average_lagging},
      {"vmma_kl_elbo", suite_vmma},
      {"distill_extraction", suite_distill},
      {"harness_conservation", suite_harness},
  };
  return suites;
}

}  // namespace

std::vector<std::string> suite_names() {
  std::vector<std::string> out;
  for (const auto& [name, fn] : registry()) out.push_back(name);
  return out;
}

std::vector<SuiteResult> run_suites(const std::vector<std::string>& only) {
  for (const auto& name : only) {
    const auto names = suite_names();
    if (std::find(names.begin(), names.end(), name) == names.end())
      throw ConfigError("unknown verify suite '" + name + "'");
  }
  std::vector<SuiteResult> out;
  for (const auto& [name, fn] : registry()) {
    if (!only.empty() && std::find(only.begin(), only.end(), name) == only.end()) continue;
    SuiteResult r;
    r.name = name;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      r.detail = fn();
      r.passed = r.detail.empty();
    } catch (const std::exception& e) {
      r.detail = std::string("exception: ") + e.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace simulst::verify
