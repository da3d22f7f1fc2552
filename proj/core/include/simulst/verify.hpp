#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "simulst/corpus.hpp"
#include "simulst/matrix.hpp"

namespace simulst::verify {

/// Seed at which the division recurrence is known to create mass on the
/// saturated-gate family below.
inline constexpr std::uint64_t kInstabilitySeed = 2022;

/// Low-probability gates U(0.005, 0.02) everywhere, except row 0 which
/// alternates a moderate gate U(0.2, 0.45) with a fully saturated one
/// (denorm_min); last column is 1.
StepwiseProbMatrix saturated_gate_matrix(std::uint64_t seed, std::size_t tgt_len = 200,
                                         std::size_t src_len = 200);

/// Random stepwise matrix with entries drawn so that both tiny and large
/// gates appear; last column 1.
StepwiseProbMatrix random_stepwise(std::uint64_t seed, std::size_t tgt_len, std::size_t src_len);

/// Noisy monotone task used for the wait-k trend check.
inline constexpr std::uint64_t kTrendCorpusSeed = 20220901;
SyntheticTaskSpec trend_task_spec();

struct SuiteResult {
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

std::vector<std::string> suite_names();

/// Runs the named suites (all when `only` is empty). Unknown names throw ConfigError.
std::vector<SuiteResult> run_suites(const std::vector<std::string>& only = {});

}  // namespace simulst::verify
