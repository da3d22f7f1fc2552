#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <sstream>

#include "../oracles.hpp"
#include "simulst/bleu.hpp"
#include "simulst/corpus.hpp"
#include "simulst/error.hpp"

using namespace simulst;

TEST(GenerateCorpus, IdentityTask) {
  const auto c = generate_corpus(SyntheticTaskSpec{}, 1, 0);
  ASSERT_EQ(c.size(), 1u);
  EXPECT_EQ(c[0].target, c[0].source);
  for (std::size_t i = 0; i < c[0].target_len(); ++i) EXPECT_EQ(c[0].oracle_alignment[i], i + 1);
  EXPECT_DOUBLE_EQ(c[0].source_duration_ms(), 280.0 * static_cast<double>(c[0].source_len()));
}

TEST(GenerateCorpus, ShiftTask) {
  SyntheticTaskSpec spec;
  spec.alignment_kind = AlignmentKind::Shift;
  spec.shift = 2;
  spec.length_range = {5, 5};
  const auto c = generate_corpus(spec, 3, 4);
  for (const auto& u : c)
    EXPECT_EQ(u.oracle_alignment, (std::vector<std::size_t>{3, 4, 5, 5, 5}));
}

TEST(GenerateCorpus, RandomMonotoneIsDeterministicAndValid) {
  SyntheticTaskSpec spec;
  spec.alignment_kind = AlignmentKind::RandomMonotone;
  spec.alignment_seed = 7;
  spec.noise_rate = 0.25;
  const auto a = generate_corpus(spec, 100, 7), b = generate_corpus(spec, 100, 7);
  std::ostringstream sa, sb;
  write_corpus(sa, a);
  write_corpus(sb, b);
  EXPECT_EQ(sa.str(), sb.str());
  for (const auto& u : a) {
    EXPECT_NO_THROW(validate(u, spec.vocab_size));
    EXPECT_TRUE(std::is_sorted(u.oracle_alignment.begin(), u.oracle_alignment.end()));
    EXPECT_LE(u.oracle_alignment.back(), u.source_len());
  }
  EXPECT_NE(sa.str(), [&] {
    std::ostringstream o;
    write_corpus(o, generate_corpus(spec, 100, 8));
    return o.str();
  }());
}

TEST(GenerateCorpus, InvalidSpecs) {
  SyntheticTaskSpec s;
  s.length_range = {9, 3};
  EXPECT_THROW(generate_corpus(s, 1, 0), ConfigError);
  s = {};
  s.vocab_size = 1;
  EXPECT_THROW(generate_corpus(s, 1, 0), ConfigError);
  EXPECT_THROW(generate_corpus(SyntheticTaskSpec{}, 0, 0), ConfigError);
}

TEST(Corpus, JsonLinesRoundTripAndValidation) {
  const auto c = generate_corpus(SyntheticTaskSpec{}, 5, 3);
  std::stringstream ss;
  write_corpus(ss, c);
  EXPECT_EQ(read_corpus(ss), c);
  std::stringstream bad(R"({"id":"x","source":[1,2],"target":[1],"oracle_alignment":[3],"src_tok_ms":280})");
  EXPECT_THROW(read_corpus(bad), Error);
}

TEST(QualityScore, IdentityEmptyAndErrors) {
  const std::vector<Token> ref{4, 5, 6, 7, 8};
  EXPECT_DOUBLE_EQ(quality_score(ref, ref), 100.0);
  EXPECT_EQ(quality_score({}, ref), 0.0);
  EXPECT_THROW(quality_score(ref, {}), MetricError);
}

TEST(QualityScore, HandExample) {
  const std::vector<Token> hyp{1, 2, 3, 4}, ref{1, 2, 3, 5};
  // p1 = 3/4, p2 = (2+1)/(3+1), p3 = (1+1)/(2+1), p4 = (0+1)/(1+1)
  const double want = 100.0 * std::pow(0.75 * 0.75 * (2.0 / 3.0) * 0.5, 0.25);
  EXPECT_NEAR(quality_score(hyp, ref), want, 1e-12);
  EXPECT_NEAR(want, 65.80, 0.01);
}

TEST(QualityScore, MatchesIndependentImplementation) {
  std::mt19937_64 rng(77);
  for (int t = 0; t < 2000; ++t) {
    std::vector<Token> hyp(rng() % 12), ref(1 + rng() % 12);
    for (auto& x : hyp) x = static_cast<Token>(rng() % 4);
    for (auto& x : ref) x = static_cast<Token>(rng() % 4);
    const std::vector<int> h(hyp.begin(), hyp.end()), r(ref.begin(), ref.end());
    ASSERT_NEAR(quality_score(hyp, ref), oracles::bleu(h, r), 1e-9);
    const double s = quality_score(hyp, ref);
    ASSERT_GE(s, 0.0);
    ASSERT_LE(s, 100.0);
  }
}

TEST(CorpusQuality, PermutationInvariant) {
  std::mt19937_64 rng(5);
  std::vector<std::vector<Token>> hyps(20), refs(20);
  for (std::size_t i = 0; i < 20; ++i) {
    refs[i].resize(3 + rng() % 8);
    for (auto& x : refs[i]) x = static_cast<Token>(rng() % 6);
    hyps[i] = refs[i];
    for (auto& x : hyps[i])
      if (rng() % 3 == 0) x = static_cast<Token>(rng() % 6);
  }
  const double base = corpus_quality(hyps, refs);
  std::vector<std::size_t> perm(20);
  for (std::size_t i = 0; i < 20; ++i) perm[i] = i;
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<std::vector<Token>> ph, pr;
  for (auto p : perm) {
    ph.push_back(hyps[p]);
    pr.push_back(refs[p]);
  }
  EXPECT_DOUBLE_EQ(corpus_quality(ph, pr), base);
}
