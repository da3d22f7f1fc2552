#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "simulst/corpus.hpp"
#include "simulst/distill.hpp"
#include "simulst/error.hpp"
#include "simulst/vmma.hpp"

using namespace simulst;

namespace {

class FixedRank final : public OfflineLikelihoodOracle {
 public:
  FixedRank(std::size_t value, std::size_t full, std::size_t at_full)
      : value_(value), full_(full), at_full_(at_full) {}
  std::size_t rank(std::size_t len, std::size_t) const override {
    return len >= full_ ? at_full_ : value_;
  }

 private:
  std::size_t value_, full_, at_full_;
};

class Failing final : public OfflineLikelihoodOracle {
 public:
  std::size_t rank(std::size_t, std::size_t) const override { throw std::runtime_error("boom"); }
};

std::vector<std::size_t> grid(std::size_t m, std::size_t step) {
  std::vector<std::size_t> g;
  for (std::size_t l = step; l < m; l += step) g.push_back(l);
  g.push_back(m);
  return g;
}

}  // namespace

TEST(ExtractOfflinePolicy, RankOneTakesFirstProbe) {
  const std::vector<std::size_t> probes{2, 4, 6};
  const auto t = extract_offline_policy(FixedRank(1, 6, 1), probes, 3, 5);
  EXPECT_EQ(t.prefix_lengths, std::vector<std::size_t>(5, 2));
  EXPECT_EQ(t.rank_threshold, 3u);
}

TEST(ExtractOfflinePolicy, FallbackToFullSource) {
  const std::vector<std::size_t> probes{1, 2, 3, 4};
  const auto t = extract_offline_policy(FixedRank(4, 4, 4), probes, 3, 3);
  EXPECT_EQ(t.prefix_lengths, std::vector<std::size_t>(3, 4));
}

TEST(ExtractOfflinePolicy, SyntheticOracleRecoversAlignment) {
  SyntheticTaskSpec spec;
  spec.alignment_kind = AlignmentKind::RandomMonotone;
  spec.alignment_seed = 4;
  spec.noise_rate = 0.3;
  for (const auto& u : generate_corpus(spec, 100, 21)) {
    const auto probes = grid(u.source_len(), 3);
    const auto t = extract_offline_policy(SyntheticRankOracle(u, spec.vocab_size), probes, 1,
                                          u.target_len());
    for (std::size_t j = 0; j < u.target_len(); ++j) {
      const auto want = *std::find_if(probes.begin(), probes.end(),
                                      [&](std::size_t l) { return l >= u.oracle_alignment[j]; });
      ASSERT_EQ(t.prefix_lengths[j], want) << u.id << " token " << j;
    }
  }
}

TEST(ExtractOfflinePolicy, MonotoneInThresholdAndGrid) {
  SyntheticTaskSpec spec;
  spec.alignment_kind = AlignmentKind::RandomMonotone;
  for (const auto& u : generate_corpus(spec, 30, 2)) {
    const SyntheticRankOracle o(u, spec.vocab_size);
    const auto coarse = grid(u.source_len(), 4), fine = grid(u.source_len(), 1);
    std::size_t prev_r = 0;
    std::vector<std::size_t> prev;
    for (std::size_t r : {1u, 10u, 40u, 100u, 1000u}) {
      const auto t = extract_offline_policy(o, coarse, r, u.target_len());
      if (prev_r)
        for (std::size_t j = 0; j < t.prefix_lengths.size(); ++j) ASSERT_LE(t.prefix_lengths[j], prev[j]);
      prev = t.prefix_lengths;
      prev_r = r;
      const auto refined = extract_offline_policy(o, fine, r, u.target_len());
      for (std::size_t j = 0; j < t.prefix_lengths.size(); ++j)
        ASSERT_LE(refined.prefix_lengths[j], t.prefix_lengths[j]);
    }
  }
}

TEST(ExtractOfflinePolicy, ErrorsCarryContext) {
  const std::vector<std::size_t> probes{1, 2};
  try {
    extract_offline_policy(Failing(), probes, 1, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("L=1"), std::string::npos);
  }
  const std::vector<std::size_t> bad{2, 2};
  EXPECT_THROW(extract_offline_policy(FixedRank(1, 2, 1), bad, 1, 1), ConfigError);
  EXPECT_THROW(extract_offline_policy(FixedRank(1, 2, 1), std::vector<std::size_t>{}, 1, 1), ConfigError);
}

TEST(AuxAttentionLoss, Examples) {
  const std::vector<double> row{0.1, 0.2, 0.3, 0.4};
  EXPECT_NEAR(aux_attention_loss(row, 2, 4).value, -0.7, 1e-15);
  EXPECT_NEAR(aux_attention_loss(row, 0, 4).value, -1.0, 1e-15);
  const std::vector<double> zeros{0.0, 0.0, 1.0};
  EXPECT_EQ(aux_attention_loss(zeros, 0, 2).value, 0.0);
  const auto empty = aux_attention_loss(row, 3, 3);
  EXPECT_TRUE(empty.degenerate);
  EXPECT_EQ(empty.value, 0.0);
}

TEST(AuxAttentionLoss, BoundedForSubStochasticRows) {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 5000; ++t) {
    const std::size_t m = 1 + rng() % 12;
    std::vector<double> row(m);
    double s = 0;
    for (auto& v : row) s += v = u(rng);
    const double scale = u(rng) / s;  // total mass <= 1
    for (auto& v : row) v *= scale;
    const std::size_t a = rng() % (m + 1), b = rng() % (m + 1);
    const auto loss = aux_attention_loss(row, std::min(a, b), std::max(a, b));
    ASSERT_GE(loss.value, -1.0 - 1e-12);
    ASSERT_LE(loss.value, 0.0);
  }
}

TEST(OfflineLabelPrior, DiagonalAndOfflineLabels) {
  OfflinePolicyTable diag{1, {1, 2, 3, 4}};
  const auto w = offline_label_prior(diag, 4, 4);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 1; j <= 4; ++j) {
      if (j >= i + 1)
        EXPECT_GT(w.write_prob(i, j), 0.99);
      else
        EXPECT_LT(w.write_prob(i, j), 0.01);
    }
  OfflinePolicyTable offline{1, {5, 5, 5}};
  const auto o = offline_label_prior(offline, 5, 3);
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 1; j < 5; ++j) EXPECT_LT(o.write_prob(i, j), 0.01);
    EXPECT_GT(o.write_prob(i, 5), 0.99);
  }
}

TEST(OfflineLabelPrior, SampledDelaysTrackLabels) {
  OfflinePolicyTable t{1, {1, 3, 3, 4, 6, 6}};
  const auto w = offline_label_prior(t, 6, 6);
  std::mt19937_64 rng(8);
  std::vector<double> mean(6, 0.0);
  const int n = 10000;
  for (int s = 0; s < n; ++s) {
    const auto c = sample_trace(w, rng).consumption();
    for (std::size_t i = 0; i < 6; ++i) mean[i] += static_cast<double>(c[i]) / n;
  }
  for (std::size_t i = 0; i < 6; ++i)
    EXPECT_NEAR(mean[i], static_cast<double>(t.prefix_lengths[i]), 1.0) << i;
}

TEST(OfflinePolicyTable, JsonShape) {
  const OfflinePolicyTable t{2, {1, 4, 4}};
  const nlohmann::json j = t;
  EXPECT_EQ(j, nlohmann::json::parse(R"({"r":2,"L":[1,4,4]})"));
  EXPECT_EQ(j.get<OfflinePolicyTable>(), t);
}
