#pragma once

#include <atomic>
#include <cstddef>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "simulst/corpus.hpp"
#include "simulst/latency.hpp"
#include "simulst/net.hpp"
#include "simulst/session.hpp"
#include "simulst/timeline.hpp"

namespace simulst {

struct ServerOptions {
  net::Endpoint endpoint;
  /// Per-message receive timeout; an idle client fails its session.
  int session_timeout_ms = 10'000;
  /// Stop waiting for new connections after this long without one.
  int idle_timeout_ms = 30'000;
};

struct SessionResult {
  std::size_t index = 0;  // position in the corpus
  std::string id;
  bool ok = false;
  std::string error;
  LatencyReport report;
  SessionTimeline timeline;
};

/// Streams one utterance per connection. SEGMENTs go out immediately with
/// virtual arrival stamps, or at their arrival time when config.realtime.
class Server {
 public:
  Server(std::vector<Utterance> corpus, SessionConfig config, ServerOptions options = {});
  ~Server();

  std::uint16_t port() const noexcept { return listener_.port(); }
  /// Blocks until every utterance was served (or failed) or stop() is called.
  /// Results come back in corpus order; unserved utterances are failures.
  std::vector<SessionResult> serve();
  void stop() noexcept { stop_ = true; }

 private:
  SessionResult handle(net::Stream stream, std::size_t index);

  std::vector<Utterance> corpus_;
  SessionConfig config_;
  ServerOptions options_;
  net::Listener listener_;
  std::atomic<bool> stop_{false};
  std::atomic<std::size_t> next_{0};
};

struct ClientOptions {
  /// Overrides the policy announced in HELLO.
  std::optional<PolicySpec> policy;
  int timeout_ms = 10'000;
  /// Sessions run concurrently by connect().
  std::size_t parallel = 1;
  /// Stop after this many sessions (0: until the server runs out).
  std::size_t max_sessions = 0;
};

struct ClientResult {
  std::size_t index = 0;
  std::string id;
  bool ok = false;  // both sides succeeded and METRICS matched
  std::string error;
  LatencyReport local;
  LatencyReport remote;
  double max_diff = 0.0;
  SessionTimeline timeline;
};

inline constexpr double kMetricsTolerance = 1.0;  // ms per field

/// Runs one session; nullopt when the server has nothing left to serve.
std::optional<ClientResult> run_remote_session(const net::Endpoint& ep,
                                               const ClientOptions& options = {});

/// Runs sessions until the server is exhausted. Results ordered by index.
std::vector<ClientResult> connect(const net::Endpoint& ep, const ClientOptions& options = {});

}  // namespace simulst
