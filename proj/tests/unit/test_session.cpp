#include <gtest/gtest.h>

#include <sstream>

#include "simulst/attnmath.hpp"
#include "simulst/batch.hpp"
#include "simulst/error.hpp"
#include "simulst/session.hpp"

using namespace simulst;

namespace {

Utterance identity(std::size_t m, double tok_ms = 1000.0) {
  Utterance u;
  u.id = "id" + std::to_string(m);
  u.src_tok_ms = tok_ms;
  for (std::size_t j = 0; j < m; ++j) {
    u.source.push_back(static_cast<Token>(j % 7));
    u.target.push_back(static_cast<Token>(j % 7));
    u.oracle_alignment.push_back(j + 1);
  }
  return u;
}

SessionConfig waitk(std::size_t k, std::size_t l = 1) {
  SessionConfig c;
  c.policy.kind = PolicyKind::WaitK;
  c.policy.k = k;
  c.emission_rate = l;
  return c;
}

double audio_ms(const SessionTimeline& tl) {
  double s = 0;
  for (const auto& e : tl.events)
    if (e.kind == EventKind::EmitAudio) s += us_to_ms(e.end_sim_us - e.start_sim_us);
  return s;
}

class ScriptedPolicy final : public Policy {
 public:
  explicit ScriptedPolicy(std::string s) : script_(std::move(s)) {}
  Action decide(const AgentState&) override {
    return pos_ < script_.size() && script_[pos_++] == 'W' ? Action::Write : Action::Read;
  }

 private:
  std::string script_;
  std::size_t pos_ = 0;
};

}  // namespace

TEST(SessionConfig, Validation) {
  SessionConfig c;
  EXPECT_NO_THROW(validate(c));
  c.emission_rate = 0;
  EXPECT_THROW(validate(c), ConfigError);
  c = {};
  c.unit_ms = 0;
  EXPECT_THROW(validate(c), ConfigError);
  c = {};
  c.policy.k = 0;
  EXPECT_THROW(validate(c), ConfigError);
  c = {};
  c.pre_decision_ms = -1;
  EXPECT_THROW(validate(c), ConfigError);
}

TEST(SessionConfig, JsonRoundTripAndPointerErrors) {
  SessionConfig c;
  c.policy.kind = PolicyKind::Vmma;
  c.policy.lambda = 0.25;
  c.policy.scorer = ScorerKind::Label;
  c.emission_rate = kEmitAtEnd;
  c.compute.per_decision_ms = 3;
  const nlohmann::json j = c;
  const auto back = j.get<SessionConfig>();
  EXPECT_EQ(nlohmann::json(back), j);
  try {
    nlohmann::json::parse(R"({"policy":{"k":"three"}})").get<SessionConfig>();
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(std::string(e.what()).rfind("/policy/k", 0), 0u) << e.what();
  }
}

TEST(RunSession, OfflineWaitsForWholeSource) {
  const auto u = identity(5);
  SessionConfig c;
  c.policy.kind = PolicyKind::Offline;
  const auto tl = run_session(u, c);
  EXPECT_GE(tl.t0_sim_us(), tl.source_duration_us());
  EXPECT_DOUBLE_EQ(compute_report(tl).al_ms, 5000.0);
}

TEST(RunSession, WaitOneDelaysFollowSchedule) {
  for (std::size_t m : {3u, 6u, 11u}) {
    const auto u = identity(m);
    const auto tl = run_session(u, waitk(1));
    const auto d = speech_delay_extraction(tl, SyntheticAligner(20.0));
    const auto counts = waitk_schedule(1, m, m).consumption();
    ASSERT_EQ(d.delays_ms.size(), m);
    for (std::size_t i = 0; i < m; ++i) EXPECT_DOUBLE_EQ(d.delays_ms[i], 1000.0 * static_cast<double>(counts[i]));
    EXPECT_EQ(tl.consumed, counts);
  }
}

TEST(RunSession, WaitKAlEqualsKSegments) {
  const auto u = identity(8, 280.0);
  for (std::size_t k = 1; k <= 8; ++k) EXPECT_NEAR(compute_report(run_session(u, waitk(k))).al_ms, 280.0 * static_cast<double>(k), 1e-9);
}

TEST(RunSession, SingleVocoderCallHasNoDiscontinuity) {
  const auto u = identity(6);
  const auto one = run_session(u, waitk(2, 1));
  const auto all = run_session(u, waitk(2, 6 * 5));
  EXPECT_EQ(discontinuity_report(all).gap_count, 0u);
  EXPECT_EQ(discontinuity_report(all).total_gap_ms, 0.0);
  EXPECT_GE(discontinuity_report(one).total_gap_ms, 0.0);
  EXPECT_EQ(one.hypothesis, all.hypothesis);
  EXPECT_EQ(compute_report(one).quality, compute_report(all).quality);
}

TEST(RunSession, ConservationAndEmissionRateOrdering) {
  const auto corpus = generate_corpus(SyntheticTaskSpec{}, 10, 4);
  for (const auto& u : corpus) {
    const std::size_t total = u.target_len() * 5;
    std::vector<double> ideal1;
    for (std::size_t l : {std::size_t{1}, std::size_t{5}, total, kEmitAtEnd}) {
      const auto tl = run_session(u, waitk(3, l));
      EXPECT_DOUBLE_EQ(audio_ms(tl), 20.0 * static_cast<double>(total));
      const auto d = speech_delay_extraction(tl, SyntheticAligner(20.0)).delays_ms;
      if (l == 1) ideal1 = d;
      for (std::size_t i = 0; i < d.size(); ++i) EXPECT_LE(ideal1[i], d[i]);
    }
  }
}

TEST(RunSession, CausalityAndOrdering) {
  SyntheticTaskSpec spec;
  spec.alignment_kind = AlignmentKind::RandomMonotone;
  spec.noise_rate = 0.3;
  SessionConfig c;
  c.policy.kind = PolicyKind::Vmma;
  c.policy.lambda = 0.3;
  c.compute.per_decision_ms = 2;
  c.compute.per_unit_ms = 0.5;
  c.emission_rate = 3;
  for (const auto& u : generate_corpus(spec, 30, 5)) {
    const auto tl = run_session(u, c);
    EXPECT_NO_THROW(check_timeline(tl));
    std::size_t read = 0;
    Micros arrival = 0;
    for (const auto& e : tl.events) {
      if (e.kind == EventKind::Read) {
        read = e.segment;
        arrival = tl.segment_us * static_cast<Micros>(e.segment);
      }
      if (e.kind == EventKind::WriteUnit) {
        EXPECT_GE(e.sim_us, arrival);
        EXPECT_EQ(tl.consumed[e.token], read);
      }
    }
    const auto r = compute_report(tl);
    EXPECT_GE(r.ca_al_ms, r.al_ms);
  }
}

TEST(RunSession, RealtimeKeepsIdealProfile) {
  const auto u = identity(6, 50.0);
  SessionConfig c = waitk(2);
  const auto virt = run_session(u, c);
  c.realtime = true;
  c.time_scale = 0.1;
  c.compute.kind = ComputeKind::MeasuredWallclock;
  const auto real = run_session(u, c);
  const SyntheticAligner al(20.0);
  EXPECT_EQ(speech_delay_extraction(virt, al).delays_ms, speech_delay_extraction(real, al).delays_ms);
  const auto r = compute_report(real);
  EXPECT_GE(r.ca_al_ms, r.al_ms);
}

TEST(RunSession, ReadsPastSourceBecomeWrites) {
  const auto u = identity(2);
  ScriptedPolicy p("RRRRRRR");
  const auto tl = run_session(u, waitk(1), p);
  EXPECT_EQ(tl.hypothesis.size(), 2u);
  LocalSource src(u, 1000);
  EXPECT_FALSE(src.fetch(3).has_value());
  EXPECT_TRUE(src.fetch(2)->last);
}

TEST(RunSession, DeterministicForFixedSeeds) {
  SessionConfig c;
  c.policy.kind = PolicyKind::Vmma;
  c.policy.seed = 42;
  const auto corpus = generate_corpus(SyntheticTaskSpec{}, 8, 1);
  const auto a = run_corpus(corpus, c, 4), b = run_corpus(corpus, c, 1);
  for (std::size_t i = 0; i < corpus.size(); ++i) EXPECT_EQ(a[i].timeline, b[i].timeline);
}

TEST(Discontinuity, Examples) {
  const auto u = identity(2);
  // one emission per token with a blocking READ between them
  TimelineBuilder b("g", u, 1000'000, 20'000, 1, 1);
  b.segment(1, 1000'000, 1000'000, 1000'000 + 5'000);
  b.unit(0, 0, 0, 1000'000, 1005'000);
  b.vocoder(1000'000, 1005'000);
  b.segment(2, 2000'000, 2000'000, 2000'000 + 5'000);
  b.unit(1, 1, 1, 2000'000, 2005'000);
  b.vocoder(2000'000, 2005'000);
  const auto tl = b.finish(2000'000, 2005'000);
  const auto r = discontinuity_report(tl);
  EXPECT_EQ(r.gap_count, 1u);
  // first audio ends at 1025 ms, second batch is ready at 2005 ms
  EXPECT_DOUBLE_EQ(r.total_gap_ms, 980.0);
  EXPECT_DOUBLE_EQ(r.max_gap_ms, r.total_gap_ms);

  SessionConfig c;
  c.policy.kind = PolicyKind::Offline;
  const auto off = run_session(identity(5), c);
  EXPECT_EQ(discontinuity_report(off).total_gap_ms, 0.0);
}

TEST(SessionLog, RoundTrip) {
  const auto corpus = generate_corpus(SyntheticTaskSpec{}, 3, 2);
  std::stringstream ss;
  std::vector<SessionTimeline> tls;
  for (const auto& u : corpus) {
    tls.push_back(run_session(u, waitk(2, 3)));
    write_session_log(ss, tls.back());
  }
  const auto back = read_session_logs(ss);
  ASSERT_EQ(back.size(), tls.size());
  for (std::size_t i = 0; i < tls.size(); ++i) {
    EXPECT_EQ(back[i], tls[i]);
    EXPECT_EQ(compute_report(back[i]), compute_report(tls[i]));
  }
  std::stringstream bad("{\"kind\":\"read\",\"session\":\"x\",\"sim_us\":0,\"wall_us\":0}\n");
  EXPECT_THROW(read_session_logs(bad), ProtocolError);
}

TEST(Sweep, RowsOrderedAndSinglePoint) {
  const auto corpus = generate_corpus(SyntheticTaskSpec{}, 5, 3);
  const auto rows = run_sweep(corpus, SessionConfig{}, SweepParam::K, {5, 1, 3}, 3);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0].param, 1);
  EXPECT_EQ(rows[2].param, 5);
  EXPECT_LT(rows[0].result.al_ms, rows[1].result.al_ms);
  EXPECT_EQ(run_sweep(corpus, SessionConfig{}, SweepParam::K, {2}).size(), 1u);
  EXPECT_THROW(run_sweep(corpus, SessionConfig{}, SweepParam::K, {}), ConfigError);
  EXPECT_EQ(sweep_csv_row(SweepParam::K, rows[0]).substr(0, 2), "1,");
}
