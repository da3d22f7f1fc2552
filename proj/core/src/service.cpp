#include "simulst/service.hpp"

#include <algorithm>
#include <chrono>
#include <thread>

#include "simulst/error.hpp"
#include "simulst/wire.hpp"
#include "spdlog/spdlog.h"

namespace simulst {

using nlohmann::json;
using wire::Direction;
using wire::Message;
using wire::Type;

namespace {

struct Peer {
  net::Stream& stream;
  wire::Sequencer out;
  wire::StreamChecker in;
  int timeout_ms;

  Peer(net::Stream& s, Direction incoming, int timeout)
      : stream(s), in(incoming), timeout_ms(timeout) {}

  void send(Type t, json body) { stream.send_line(wire::encode(out.make(t, std::move(body)))); }

  Message recv() {
    auto line = stream.recv_line(timeout_ms);
    if (!line) throw TransportError("peer disconnected");
    Message m = wire::decode(*line);
    in.check(m);
    return m;
  }
};

template <typename T>
T field(const json& body, const char* key) {
  auto it = body.find(key);
  if (it == body.end()) throw ProtocolError(std::string("message body lacks '") + key + "'");
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw ProtocolError(std::string("message field '") + key + "' has the wrong type");
  }
}

}  // namespace

Server::Server(std::vector<Utterance> corpus, SessionConfig config, ServerOptions options)
    : corpus_(std::move(corpus)),
      config_(std::move(config)),
      options_(std::move(options)),
      listener_(options_.endpoint) {
  validate(config_);
  for (const auto& u : corpus_) validate(u);
}

Server::~Server() { listener_.close(); }

std::vector<SessionResult> Server::serve() {
  std::vector<SessionResult> results(corpus_.size());
  std::vector<std::thread> workers;
  std::mutex late_mu;
  std::vector<std::thread> late;
  auto idle_since = std::chrono::steady_clock::now();

  while (!stop_ && next_.load() < corpus_.size()) {
    auto stream = listener_.accept(100);
    if (!stream) {
      const auto idle = std::chrono::steady_clock::now() - idle_since;
      if (idle > std::chrono::milliseconds(options_.idle_timeout_ms)) {
        spdlog::warn("server idle for {} ms, stopping", options_.idle_timeout_ms);
        break;
      }
      continue;
    }
    idle_since = std::chrono::steady_clock::now();
    const std::size_t index = next_++;
    workers.emplace_back([this, &results, index, s = std::move(*stream)]() mutable {
      results[index] = handle(std::move(s), index);
    });
  }

  // Tell latecomers there is nothing left while the last sessions finish.
  std::atomic<bool> draining{true};
  std::thread porter([&] {
    while (draining) {
      auto stream = listener_.accept(50);
      if (!stream) continue;
      try {
        Peer peer(*stream, Direction::ClientToServer, options_.session_timeout_ms);
        peer.send(Type::Hello, json{{"done", true}});
      } catch (const Error&) {
      }
    }
  });
  for (auto& w : workers) w.join();
  draining = false;
  porter.join();
  listener_.close();

  for (std::size_t i = 0; i < corpus_.size(); ++i) {
    if (i >= next_.load()) {
      results[i].index = i;
      results[i].id = corpus_[i].id;
      results[i].error = "not served";
    }
  }
  return results;
}

SessionResult Server::handle(net::Stream stream, std::size_t index) {
  const Utterance& utt = corpus_[index];
  SessionResult result;
  result.index = index;
  result.id = utt.id;
  Peer peer(stream, Direction::ClientToServer, options_.session_timeout_ms);
  peer.out.set_session(utt.id);
  const auto start = std::chrono::steady_clock::now();

  try {
    json cfg = config_;
    peer.send(Type::Hello, json{{"index", index}, {"utterance", utt}, {"config", cfg}});

    const Micros seg_us = config_.segment_us(utt);
    const std::size_t upt = config_.units_per_token;
    TimelineBuilder builder(utt.id, utt, seg_us, ms_to_us(config_.unit_ms), upt,
                            config_.emission_rate);
    std::size_t sent = 0;  // segments delivered

    auto take_ack = [&](const json& body) {
      auto it = body.find("read_ack");
      if (it == body.end()) return;
      const auto seg = field<std::size_t>(*it, "segment");
      if (seg == 0 || seg > sent) throw ProtocolError("read_ack for an undelivered segment");
      builder.segment(seg, seg_us * static_cast<Micros>(seg), field<Micros>(*it, "sim_us"),
                      field<Micros>(*it, "wall_us"));
    };

    for (;;) {
      Message m = peer.recv();
      take_ack(m.body);
      if (m.type == Type::ReadReq) {
        const auto seg = field<std::size_t>(m.body, "segment");
        if (seg > utt.source_len()) {
          peer.send(Type::EosSrc, json::object());
          continue;
        }
        if (seg != sent + 1)
          throw ProtocolError("READ_REQ for segment " + std::to_string(seg) + ", expected " +
                              std::to_string(sent + 1));
        const Micros arrival = seg_us * static_cast<Micros>(seg);
        if (config_.realtime) {
          const auto due = start + std::chrono::nanoseconds(static_cast<std::int64_t>(
                                       static_cast<double>(arrival) * 1000.0 * config_.time_scale));
          std::this_thread::sleep_until(due);
        }
        peer.send(Type::Segment, json{{"index", seg},
                                      {"tokens", std::vector<Token>{utt.source[seg - 1]}},
                                      {"arrival_us", arrival},
                                      {"last", seg == utt.source_len()}});
        sent = seg;
      } else if (m.type == Type::Write) {
        const auto tok_idx = field<std::size_t>(m.body, "token_index");
        if (tok_idx >= utt.target_len()) throw ProtocolError("WRITE past the target end");
        const auto token = field<Token>(m.body, "token");
        const auto unit = field<std::int64_t>(m.body, "unit");
        if (unit_token(unit, upt) != token || unit < 0)
          throw ProtocolError("unit " + std::to_string(unit) + " does not encode its token");
        const bool full = builder.unit(tok_idx, token, unit, field<Micros>(m.body, "sim_us"),
                                       field<Micros>(m.body, "wall_us"));
        if (full) builder.vocoder(field<Micros>(m.body, "sim_us"),
                                  field<Micros>(m.body, "vocoder_done_us"));
      } else if (m.type == Type::EosTgt) {
        const auto sim = field<Micros>(m.body, "sim_us");
        const auto wall = field<Micros>(m.body, "wall_us");
        if (builder.pending_units() > 0) builder.vocoder(sim, field<Micros>(m.body, "flush_done_us"));
        if (builder.tokens_written() != utt.target_len())
          throw ProtocolError("EOS_TGT after " + std::to_string(builder.tokens_written()) + " of " +
                              std::to_string(utt.target_len()) + " tokens");
        result.timeline = builder.finish(sim, wall);
        check_timeline(result.timeline);
        result.report = compute_report(result.timeline);
        result.ok = true;
        peer.send(Type::Metrics, json{{"status", "ok"}, {"report", result.report}});
        return result;
      }
    }
  } catch (const Error& e) {
    result.ok = false;
    result.error = e.what();
    spdlog::warn("session {} failed: {}", utt.id, e.what());
    try {
      peer.send(Type::Metrics, json{{"status", "failed"}, {"error", result.error}});
    } catch (const Error&) {
    }
  } catch (const std::exception& e) {
    result.ok = false;
    result.error = e.what();
    spdlog::warn("session {} failed: {}", utt.id, e.what());
  }
  return result;
}

namespace {

class ClientChannel final : public SourceChannel, public UnitSink {
 public:
  explicit ClientChannel(Peer& peer) : peer_(peer) {}

  std::optional<Segment> fetch(std::size_t index) override {
    peer_.send(Type::ReadReq, with_ack(json{{"segment", index}}));
    Message m = peer_.recv();
    if (m.type == Type::EosSrc) return std::nullopt;
    if (m.type == Type::Metrics)
      throw ProtocolError("server aborted: " + m.body.value("error", std::string("unknown")));
    if (m.type != Type::Segment) throw ProtocolError("expected SEGMENT, got " + wire::to_string(m.type));
    Segment s;
    s.index = field<std::size_t>(m.body, "index");
    s.tokens = field<std::vector<Token>>(m.body, "tokens");
    s.arrival_us = field<Micros>(m.body, "arrival_us");
    s.last = field<bool>(m.body, "last");
    if (s.index != index) throw ProtocolError("SEGMENT index does not match the request");
    return s;
  }

  void on_read(std::size_t segment, Micros, Micros sim_us, Micros wall_us) override {
    ack_ = json{{"segment", segment}, {"sim_us", sim_us}, {"wall_us", wall_us}};
  }

  void on_unit(std::size_t token_index, std::int64_t unit, std::size_t unit_index, Micros sim_us,
               Micros wall_us, std::optional<Micros> vocoder_done_us) override {
    json body{{"token_index", token_index}, {"token", unit_token(unit, upt_)}, {"unit", unit},
              {"unit_index", unit_index},   {"sim_us", sim_us},                {"wall_us", wall_us}};
    if (vocoder_done_us) body["vocoder_done_us"] = *vocoder_done_us;
    peer_.send(Type::Write, with_ack(std::move(body)));
  }

  void on_finish(Micros sim_us, Micros wall_us, std::optional<Micros> flush_done_us) override {
    json body{{"sim_us", sim_us}, {"wall_us", wall_us}};
    if (flush_done_us) body["flush_done_us"] = *flush_done_us;
    peer_.send(Type::EosTgt, with_ack(std::move(body)));
  }

  void set_units_per_token(std::size_t upt) { upt_ = upt; }

 private:
  json with_ack(json body) {
    if (!ack_.is_null()) {
      body["read_ack"] = std::move(ack_);
      ack_ = nullptr;
    }
    return body;
  }

  Peer& peer_;
  json ack_;
  std::size_t upt_ = 1;
};

}  // namespace

std::optional<ClientResult> run_remote_session(const net::Endpoint& ep,
                                               const ClientOptions& options) {
  net::Stream stream;
  try {
    stream = net::connect(ep, options.timeout_ms);
  } catch (const TransportError&) {
    return std::nullopt;
  }
  Peer peer(stream, Direction::ServerToClient, options.timeout_ms);
  ClientResult result;
  Message hello;
  try {
    hello = peer.recv();
  } catch (const TransportError&) {
    // closed before assigning a session: the server is shutting down
    return std::nullopt;
  } catch (const Error& e) {
    result.error = e.what();
    return result;
  }
  try {
    if (hello.type != Type::Hello) throw ProtocolError("expected HELLO");
    if (hello.body.value("done", false)) return std::nullopt;
    peer.out.set_session(hello.session_id);
    result.index = field<std::size_t>(hello.body, "index");
    const auto utt = field<Utterance>(hello.body, "utterance");
    auto config = field<SessionConfig>(hello.body, "config");
    if (options.policy) config.policy = *options.policy;
    result.id = utt.id;

    ClientChannel channel(peer);
    channel.set_units_per_token(config.units_per_token);
    auto agent = make_policy(config.policy, utt, config.vocab_size);
    OracleTranslator translator(utt, config.vocab_size);
    StubVocoder vocoder(config.unit_ms);
    result.timeline = run_agent_loop(utt, config, *agent, translator, vocoder, channel, &channel);
    result.local = compute_report(result.timeline);

    const Message metrics = peer.recv();
    if (metrics.type != Type::Metrics) throw ProtocolError("expected METRICS");
    if (metrics.body.value("status", std::string()) != "ok")
      throw ProtocolError("server failed the session: " +
                          metrics.body.value("error", std::string("unknown")));
    result.remote = field<LatencyReport>(metrics.body, "report");
    result.max_diff = max_field_diff(result.local, result.remote);
    result.ok = result.max_diff < kMetricsTolerance;
    if (!result.ok)
      result.error = "METRICS differ from the local report by " + std::to_string(result.max_diff);
  } catch (const Error& e) {
    result.ok = false;
    result.error = e.what();
  } catch (const nlohmann::json::exception& e) {
    result.ok = false;
    result.error = std::string("bad HELLO payload: ") + e.what();
  }
  return result;
}

std::vector<ClientResult> connect(const net::Endpoint& ep, const ClientOptions& options) {
  std::vector<ClientResult> all;
  std::mutex mu;
  std::atomic<std::size_t> started{0};
  std::atomic<bool> exhausted{false};
  auto worker = [&] {
    while (!exhausted) {
      if (options.max_sessions && started++ >= options.max_sessions) return;
      auto r = run_remote_session(ep, options);
      if (!r) {
        exhausted = true;
        return;
      }
      std::lock_guard lock(mu);
      all.push_back(std::move(*r));
    }
  };
  const std::size_t n = std::max<std::size_t>(1, options.parallel);
  std::vector<std::thread> threads;
  for (std::size_t i = 0; i < n; ++i) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
  std::sort(all.begin(), all.end(),
            [](const ClientResult& a, const ClientResult& b) { return a.index < b.index; });
  return all;
}

}  // namespace simulst
