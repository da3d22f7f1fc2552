#include <gtest/gtest.h>

#include <random>

#include "../oracles.hpp"
#include "simulst/attnmath.hpp"
#include "simulst/error.hpp"
#include "simulst/latency.hpp"

using namespace simulst;

namespace {

DelayProfile profile(std::vector<double> d, double tx) {
  DelayProfile p;
  p.delays_ms = std::move(d);
  p.source_duration_ms = tx;
  return p;
}

}  // namespace

TEST(AverageLagging, HandExamples) {
  EXPECT_EQ(average_lagging(profile({3000, 3000, 3000}, 3000), 3), 3000.0);
  EXPECT_EQ(average_lagging(profile({1000, 2000, 3000}, 3000), 3), 1000.0);
  EXPECT_EQ(average_lagging(profile({2000, 3000, 4000, 4000}, 4000), 4), 2000.0);
}

TEST(AverageLagging, WaitKEqualsKSegments) {
  for (std::size_t m = 1; m <= 12; ++m)
    for (std::size_t k = 1; k <= m; ++k) {
      std::vector<double> d;
      for (auto c : waitk_schedule(k, m, m).consumption()) d.push_back(250.0 * static_cast<double>(c));
      EXPECT_NEAR(average_lagging(profile(d, 250.0 * static_cast<double>(m)), m), 250.0 * static_cast<double>(k), 1e-9);
    }
}

TEST(AverageLagging, TauSources) {
  // no token reaches T_X: every token counts
  const auto p = profile({100, 200, 300}, 1000);
  EXPECT_NEAR(average_lagging(p, 3), oracles::lagging(p.delays_ms, 1000, 3), 1e-12);
  auto marked = profile({100, 200, 300, 400}, 1000);
  marked.full_source_index = 2;
  EXPECT_NEAR(average_lagging(marked, 4), oracles::lagging(marked.delays_ms, 1000, 2), 1e-12);
  EXPECT_THROW(average_lagging(profile({}, 1000), 0), MetricError);
}

TEST(AverageLagging, ScalesLinearly) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 500.0);
  for (int t = 0; t < 200; ++t) {
    std::vector<double> d(1 + rng() % 10);
    double acc = 0;
    for (auto& x : d) x = acc += u(rng);
    const double tx = d.back() * 0.8 + 1.0, c = 0.5 + u(rng) / 100.0;
    std::vector<double> scaled = d;
    for (auto& x : scaled) x *= c;
    EXPECT_NEAR(average_lagging(profile(scaled, tx * c), d.size()), c * average_lagging(profile(d, tx), d.size()), 1e-8);
  }
}

TEST(ExpectedDelays, Examples) {
  Matrix diag(4, 4);
  for (std::size_t i = 0; i < 4; ++i) diag(i, i) = 1.0;
  const auto d = expected_delays(diag, 1.0);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(d.delays_ms[i], static_cast<double>(i + 1));
  EXPECT_EQ(expected_delays(Matrix(1, 4, 0.25), 1.0).delays_ms[0], 2.5);
  const auto a = expected_alignment_stable(StepwiseProbMatrix(Matrix::from_rows({{0.5, 1.0}, {0.5, 1.0}})));
  const auto e = expected_delays(a, 1.0);
  EXPECT_NEAR(e.delays_ms[0], 1.5, 1e-15);
  EXPECT_NEAR(e.delays_ms[1], 1.75, 1e-15);
}

TEST(LatencyLoss, Examples) {
  Matrix diag(4, 4);
  for (std::size_t i = 0; i < 4; ++i) diag(i, i) = 1.0;
  EXPECT_NEAR(latency_loss(expected_delays(diag, 1.0), 4), 1.0, 1e-15);
  Matrix wait_all(4, 4);
  for (std::size_t i = 0; i < 4; ++i) wait_all(i, 3) = 1.0;
  EXPECT_NEAR(latency_loss(expected_delays(wait_all, 1.0), 4), 2.5, 1e-15);
}

TEST(LatencyLoss, MonotoneUnderRightwardShift) {
  std::mt19937_64 rng(19);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 500; ++t) {
    const std::size_t n = 1 + rng() % 6, m = 2 + rng() % 6;
    Matrix a(n, m);
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0;
      for (std::size_t j = 0; j < m; ++j) s += a(i, j) = u(rng);
      for (std::size_t j = 0; j < m; ++j) a(i, j) /= s;
    }
    Matrix b = a;
    const std::size_t i = rng() % n, j = rng() % (m - 1);
    const double moved = b(i, j) * u(rng);
    b(i, j) -= moved;
    b(i, j + 1) += moved;
    ASSERT_GE(latency_loss(expected_delays(b, 1.0), n), latency_loss(expected_delays(a, 1.0), n) - 1e-12);
  }
}

TEST(LatencyReport, CsvAndJson) {
  LatencyReport r{"u1", 1000.5, 1100.25, 900.125, 12.0, 7, 55.5};
  EXPECT_EQ(csv_header(), "id,al_ms,ca_al_ms,mean_delay_ms,discont_ms,n_tokens,quality");
  EXPECT_EQ(csv_row(r), "u1,1000.500,1100.250,900.125,12.000,7,55.5000");
  const nlohmann::json j = r;
  EXPECT_EQ(j.get<LatencyReport>(), r);
  LatencyReport s = r;
  s.ca_al_ms += 0.5;
  EXPECT_DOUBLE_EQ(max_field_diff(r, s), 0.5);
}
