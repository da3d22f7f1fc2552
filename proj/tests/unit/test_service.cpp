#include <gtest/gtest.h>

#include <future>
#include <thread>

#include "simulst/error.hpp"
#include "simulst/net.hpp"
#include "simulst/service.hpp"
#include "simulst/wire.hpp"

using namespace simulst;
using nlohmann::json;
using wire::Type;

namespace {

SyntheticTaskSpec noisy() {
  SyntheticTaskSpec s;
  s.alignment_kind = AlignmentKind::RandomMonotone;
  s.noise_rate = 0.3;
  s.length_range = {4, 9};
  return s;
}

SessionConfig costed(PolicyKind kind = PolicyKind::WaitK) {
  SessionConfig c;
  c.policy.kind = kind;
  c.policy.k = 2;
  c.emission_rate = 3;
  c.compute.per_decision_ms = 4;
  c.compute.per_unit_ms = 1;
  return c;
}

struct Running {
  Server server;
  std::future<std::vector<SessionResult>> done;
  Running(std::vector<Utterance> corpus, SessionConfig cfg, ServerOptions opts = {})
      : server(std::move(corpus), std::move(cfg), opts) {
    done = std::async(std::launch::async, [this] { return server.serve(); });
  }
  net::Endpoint ep() const { return {"127.0.0.1", server.port()}; }
};

// Minimal hand-driven client for protocol misuse.
struct RawClient {
  net::Stream s;
  wire::Sequencer seq;
  json hello;
  explicit RawClient(const net::Endpoint& ep) : s(net::connect(ep)) {
    const auto m = wire::decode(*s.recv_line(5000));
    EXPECT_EQ(m.type, Type::Hello);
    seq.set_session(m.session_id);
    hello = m.body;
  }
  void send(Type t, json body) { s.send_line(wire::encode(seq.make(t, std::move(body)))); }
  wire::Message recv() { return wire::decode(*s.recv_line(5000)); }
};

}  // namespace

TEST(Wire, EncodeDecodeRoundTrip) {
  wire::Sequencer seq("u7");
  const auto m = seq.make(Type::Write, json{{"token", 3}});
  const auto back = wire::decode(wire::encode(m));
  EXPECT_EQ(back.type, Type::Write);
  EXPECT_EQ(back.session_id, "u7");
  EXPECT_EQ(back.seq_no, 1u);
  EXPECT_EQ(back.body, m.body);
  EXPECT_EQ(seq.make(Type::Write).seq_no, 2u);
  for (auto t : {Type::Hello, Type::Segment, Type::ReadReq, Type::Write, Type::EosSrc, Type::EosTgt, Type::Metrics})
    EXPECT_EQ(wire::parse_type(wire::to_string(t)), t);
}

TEST(Wire, RejectsMalformed) {
  EXPECT_THROW(wire::decode("not json"), ProtocolError);
  EXPECT_THROW(wire::decode("[1,2]"), ProtocolError);
  EXPECT_THROW(wire::decode(R"({"type":"BOGUS","session_id":"a","seq_no":1,"body":{}})"), ProtocolError);
  EXPECT_THROW(wire::decode(R"({"type":"WRITE","session_id":"a","body":{}})"), ProtocolError);
  EXPECT_THROW(wire::parse_type("bogus"), ProtocolError);
}

TEST(Wire, StreamChecker) {
  wire::StreamChecker in(wire::Direction::ClientToServer);
  wire::Sequencer seq("a");
  EXPECT_NO_THROW(in.check(seq.make(Type::ReadReq)));
  EXPECT_NO_THROW(in.check(seq.make(Type::Write)));
  auto stale = seq.make(Type::Write);
  stale.seq_no = 1;
  EXPECT_THROW(in.check(stale), ProtocolError);
  EXPECT_THROW(in.check(seq.make(Type::Segment)), ProtocolError);
  wire::Sequencer other("b");
  auto foreign = other.make(Type::Write);
  foreign.seq_no = 100;
  EXPECT_THROW(in.check(foreign), ProtocolError);
}

TEST(Net, ParseEndpoint) {
  const auto ep = net::parse_endpoint("localhost:9000");
  EXPECT_EQ(ep.host, "localhost");
  EXPECT_EQ(ep.port, 9000);
  EXPECT_THROW(net::parse_endpoint("nohost"), ConfigError);
  EXPECT_THROW(net::parse_endpoint("h:99999"), ConfigError);
}

TEST(Service, LoopbackMatchesInProcess) {
  const auto corpus = generate_corpus(noisy(), 10, 11);
  const auto cfg = costed();
  Running r(corpus, cfg);
  ClientOptions opts;
  opts.parallel = 3;
  const auto client = simulst::connect(r.ep(), opts);
  const auto server = r.done.get();
  ASSERT_EQ(client.size(), corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    ASSERT_TRUE(client[i].ok) << client[i].error;
    ASSERT_TRUE(server[i].ok) << server[i].error;
    const auto local = compute_report(run_session(corpus[i], cfg));
    EXPECT_LT(max_field_diff(local, server[i].report), kMetricsTolerance);
    EXPECT_LT(max_field_diff(local, client[i].remote), kMetricsTolerance);
    EXPECT_EQ(server[i].timeline, run_session(corpus[i], cfg));
  }
}

TEST(Service, ConcurrentVmmaSessionsAreReproducible) {
  const auto corpus = generate_corpus(noisy(), 2, 5);
  auto cfg = costed(PolicyKind::Vmma);
  cfg.policy.seed = 99;
  Running r(corpus, cfg);
  ClientOptions opts;
  opts.parallel = 2;
  const auto client = simulst::connect(r.ep(), opts);
  const auto server = r.done.get();
  ASSERT_EQ(client.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    ASSERT_TRUE(client[i].ok) << client[i].error;
    const auto seq = run_session(corpus[i], cfg);
    EXPECT_EQ(client[i].timeline, seq);
    EXPECT_EQ(csv_row(server[i].report), csv_row(compute_report(seq)));
  }
  EXPECT_NE(client[0].timeline.consumed, std::vector<std::size_t>{});
}

TEST(Service, DisconnectFailsOnlyThatSession) {
  const auto corpus = generate_corpus(noisy(), 3, 2);
  Running r(corpus, costed());
  {
    RawClient raw(r.ep());
    EXPECT_EQ(raw.hello.at("index"), 0);
    raw.send(Type::ReadReq, json{{"segment", 1}});
    EXPECT_EQ(raw.recv().type, Type::Segment);
  }
  const auto client = simulst::connect(r.ep());
  const auto server = r.done.get();
  EXPECT_FALSE(server[0].ok);
  EXPECT_FALSE(server[0].error.empty());
  EXPECT_TRUE(server[1].ok) << server[1].error;
  EXPECT_TRUE(server[2].ok) << server[2].error;
  ASSERT_EQ(client.size(), 2u);
  EXPECT_TRUE(client[0].ok && client[1].ok);
}

TEST(Service, MalformedMessageAbortsSession) {
  Running r(generate_corpus(noisy(), 1, 3), costed());
  RawClient raw(r.ep());
  raw.s.send_line("{this is not json");
  const auto m = raw.recv();
  EXPECT_EQ(m.type, Type::Metrics);
  EXPECT_EQ(m.body.at("status"), "failed");
  const auto server = r.done.get();
  EXPECT_FALSE(server[0].ok);
}

TEST(Service, WritePastTargetEndIsProtocolError) {
  const auto corpus = generate_corpus(noisy(), 1, 3);
  Running r(corpus, costed());
  RawClient raw(r.ep());
  const auto n = corpus[0].target_len();
  raw.send(Type::Write, json{{"token_index", n}, {"token", 0}, {"unit", 0}, {"unit_index", 0}, {"sim_us", 0}, {"wall_us", 0}});
  const auto m = raw.recv();
  EXPECT_EQ(m.body.at("status"), "failed");
  EXPECT_NE(m.body.at("error").get<std::string>().find("past the target end"), std::string::npos);
  EXPECT_FALSE(r.done.get()[0].ok);
}

TEST(Service, UnitMustEncodeItsToken) {
  const auto corpus = generate_corpus(noisy(), 1, 3);
  Running r(corpus, costed());
  RawClient raw(r.ep());
  const auto tok = corpus[0].target[0];
  raw.send(Type::Write, json{{"token_index", 0}, {"token", tok}, {"unit", unit_id(tok + 1, 0, 5)}, {"unit_index", 0}, {"sim_us", 0}, {"wall_us", 0}});
  EXPECT_EQ(raw.recv().body.at("status"), "failed");
  EXPECT_FALSE(r.done.get()[0].ok);
}

TEST(Service, SilentClientTimesOut) {
  ServerOptions opts;
  opts.session_timeout_ms = 200;
  Running r(generate_corpus(noisy(), 1, 3), costed(), opts);
  RawClient raw(r.ep());
  const auto server = r.done.get();
  EXPECT_FALSE(server[0].ok);
  EXPECT_NE(server[0].error.find("timed out"), std::string::npos) << server[0].error;
}

TEST(Service, ExhaustedServerSaysDone) {
  const auto corpus = generate_corpus(noisy(), 1, 3);
  Running r(corpus, costed());
  std::optional<ClientResult> first = run_remote_session(r.ep());
  ASSERT_TRUE(first && first->ok) << (first ? first->error : "none");
  // the porter answers while the server drains; afterwards the port is closed
  const auto second = run_remote_session(r.ep());
  EXPECT_FALSE(second.has_value());
  r.done.get();
}
