// simulst: streaming speech-to-unit simulation toolkit.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fmt/format.h"
#include "simulst/batch.hpp"
#include "simulst/config.hpp"
#include "simulst/corpus.hpp"
#include "simulst/error.hpp"
#include "simulst/service.hpp"
#include "simulst/session.hpp"
#include "simulst/timeline.hpp"
#include "simulst/verify.hpp"
#include "spdlog/spdlog.h"

namespace {

using namespace simulst;

constexpr int kExitFailures = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Flags shared by the commands that run sessions. Every value is optional so
/// that only flags given on the command line override the config file.
struct RunFlags {
  std::string config;
  std::string corpus;
  std::string output;
  std::string jsonl;
  std::string session_log;
  std::optional<std::size_t> jobs;
  std::optional<std::string> policy;
  std::optional<std::size_t> k;
  std::optional<double> lambda;
  std::optional<std::string> scorer;
  std::optional<std::uint64_t> seed;
  std::optional<double> pre_decision_ms;
  std::optional<std::string> emission_rate;
  std::optional<double> unit_ms;
  std::optional<std::size_t> units_per_token;
  std::optional<std::string> compute;
  std::optional<double> per_decision_ms;
  std::optional<double> per_unit_ms;
  bool realtime = false;
  std::optional<double> time_scale;
};

void add_policy_flags(CLI::App* cmd, RunFlags& f) {
  cmd->add_option("-c,--config", f.config, "JSON run configuration")->check(CLI::ExistingFile);
  cmd->add_option("--policy", f.policy, "waitk | vmma | offline")
      ->check(CLI::IsMember({"waitk", "vmma", "offline"}));
  cmd->add_option("-k", f.k, "wait-k lag")->check(CLI::PositiveNumber);
  cmd->add_option("--lambda", f.lambda, "V-MMA change-rate parameter");
  cmd->add_option("--scorer", f.scorer, "V-MMA scorer: oracle | diagonal | label | constant")
      ->check(CLI::IsMember({"oracle", "diagonal", "label", "constant"}));
  cmd->add_option("--seed", f.seed, "policy seed");
}

bool policy_overridden(const RunFlags& f) {
  return !f.config.empty() || f.policy || f.k || f.lambda || f.scorer || f.seed;
}

void add_session_flags(CLI::App* cmd, RunFlags& f) {
  add_policy_flags(cmd, f);
  cmd->add_option("--corpus", f.corpus, "corpus (JSON lines)");
  cmd->add_option("--pre-decision-ms", f.pre_decision_ms, "segment duration (0: per utterance)");
  cmd->add_option("-l,--emission-rate", f.emission_rate, "units per vocoder call, or 'inf'");
  cmd->add_option("--unit-ms", f.unit_ms, "audio duration per unit");
  cmd->add_option("--units-per-token", f.units_per_token, "units per target token");
  cmd->add_option("--compute", f.compute, "fixed_cost | measured_wallclock")
      ->check(CLI::IsMember({"fixed_cost", "measured_wallclock"}));
  cmd->add_option("--per-decision-ms", f.per_decision_ms, "fixed cost per READ/WRITE decision");
  cmd->add_option("--per-unit-ms", f.per_unit_ms, "fixed vocoder cost per unit");
  cmd->add_flag("--realtime", f.realtime, "sleep until segments arrive");
  cmd->add_option("--time-scale", f.time_scale, "real seconds per simulated second");
  cmd->add_option("-j,--jobs", f.jobs, "worker threads (0: all cores)");
}

AppConfig resolve(const RunFlags& f) {
  AppConfig cfg = f.config.empty() ? AppConfig{} : load_app_config(f.config);
  auto& s = cfg.session;
  if (!f.corpus.empty()) cfg.corpus = f.corpus;
  if (!f.output.empty()) cfg.output = f.output;
  if (!f.session_log.empty()) cfg.session_log = f.session_log;
  if (f.jobs) cfg.jobs = *f.jobs;
  if (f.policy) {
    s.policy.kind = *f.policy == "waitk" ? PolicyKind::WaitK
                    : *f.policy == "vmma" ? PolicyKind::Vmma
                                          : PolicyKind::Offline;
  }
  if (f.k) s.policy.k = *f.k;
  if (f.lambda) s.policy.lambda = *f.lambda;
  if (f.scorer) {
    nlohmann::json j = s;
    j["policy"]["scorer"] = *f.scorer;
    s = j.get<SessionConfig>();
  }
  if (f.seed) s.policy.seed = *f.seed;
  if (f.pre_decision_ms) s.pre_decision_ms = *f.pre_decision_ms;
  if (f.emission_rate) {
    if (*f.emission_rate == "inf" || *f.emission_rate == "end") {
      s.emission_rate = kEmitAtEnd;
    } else {
      try {
        std::size_t used = 0;
        const long long v = std::stoll(*f.emission_rate, &used);
        if (used != f.emission_rate->size() || v < 1) throw std::invalid_argument("l");
        s.emission_rate = static_cast<std::size_t>(v);
      } catch (const std::logic_error&) {
        throw UsageError("--emission-rate must be a positive integer or 'inf'");
      }
    }
  }
  if (f.unit_ms) s.unit_ms = *f.unit_ms;
  if (f.units_per_token) s.units_per_token = *f.units_per_token;
  if (f.compute)
    s.compute.kind = *f.compute == "fixed_cost" ? ComputeKind::FixedCost : ComputeKind::MeasuredWallclock;
  if (f.per_decision_ms) s.compute.per_decision_ms = *f.per_decision_ms;
  if (f.per_unit_ms) s.compute.per_unit_ms = *f.per_unit_ms;
  if (f.realtime) s.realtime = true;
  if (f.time_scale) s.time_scale = *f.time_scale;
  validate(s);
  return cfg;
}

std::vector<Utterance> require_corpus(const AppConfig& cfg) {
  if (cfg.corpus.empty()) throw UsageError("no corpus given (--corpus or \"corpus\" in the config)");
  auto corpus = load_corpus(cfg.corpus);
  if (corpus.empty()) throw UsageError("corpus '" + cfg.corpus + "' is empty");
  return corpus;
}

/// Writes to `path`, or stdout when it is empty or "-".
class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty() && path != "-") {
      file_.open(path, std::ios::binary | std::ios::trunc);
      if (!file_) throw UsageError("cannot write '" + path + "'");
    }
  }
  std::ostream& os() { return file_.is_open() ? file_ : std::cout; }

 private:
  std::ofstream file_;
};

void write_logs(const std::string& path, const std::vector<SessionTimeline>& timelines) {
  if (path.empty()) return;
  Output out(path);
  for (const auto& tl : timelines) write_session_log(out.os(), tl);
}

int cmd_simulate(const RunFlags& f) {
  const AppConfig cfg = resolve(f);
  const auto corpus = require_corpus(cfg);
  const auto outcomes = run_corpus(corpus, cfg.session, cfg.jobs);

  std::vector<SessionTimeline> logs;
  if (!f.jsonl.empty()) {
    Output jl(f.jsonl);
    for (const auto& o : outcomes) {
      nlohmann::json j{{"id", o.id}, {"ok", o.ok}};
      if (o.ok)
        j["report"] = o.report;
      else
        j["error"] = o.error;
      jl.os() << j.dump() << '\n';
    }
  }
  for (const auto& o : outcomes)
    if (o.ok) logs.push_back(o.timeline);
  write_logs(cfg.session_log, logs);

  Output csv(cfg.output);
  csv.os() << csv_header() << '\n' << csv_aggregate_row(cfg.session.policy.label(), aggregate(outcomes)) << '\n';

  int rc = 0;
  for (const auto& o : outcomes) {
    if (!o.ok) {
      std::cerr << "failed: " << o.id << ": " << o.error << '\n';
      rc = kExitFailures;
    }
  }
  return rc;
}

std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      std::size_t used = 0;
      values.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::logic_error&) {
      throw UsageError("bad grid value '" + item + "'");
    }
  }
  return values;
}

int cmd_sweep(const RunFlags& f, const std::string& param, const std::string& grid) {
  AppConfig cfg = resolve(f);
  if (!param.empty()) cfg.sweep.param = param;
  if (!grid.empty()) cfg.sweep.values = parse_grid(grid);
  if (cfg.sweep.param.empty()) throw UsageError("no sweep parameter (--param k|lambda)");
  if (cfg.sweep.values.empty()) throw UsageError("sweep grid is empty (--values)");
  const auto corpus = require_corpus(cfg);
  const SweepParam p = parse_sweep_param(cfg.sweep.param);
  const auto rows = run_sweep(corpus, cfg.session, p, cfg.sweep.values, cfg.jobs);
  Output csv(cfg.output);
  csv.os() << sweep_csv_header() << '\n';
  int rc = 0;
  for (const auto& r : rows) {
    csv.os() << sweep_csv_row(p, r) << '\n';
    if (r.result.failed > 0) {
      std::cerr << fmt::format("grid point {:g}: {} sessions failed\n", r.param, r.result.failed);
      rc = kExitFailures;
    }
  }
  return rc;
}

int cmd_eval(const std::string& logs_path, const std::string& output) {
  std::ifstream in(logs_path);
  if (!in) throw UsageError("cannot open session log '" + logs_path + "'");
  const auto timelines = read_session_logs(in);
  if (timelines.empty()) throw UsageError("session log '" + logs_path + "' has no sessions");
  Output csv(output);
  csv.os() << csv_header() << '\n';
  std::vector<LatencyReport> ok;
  std::size_t failed = 0;
  for (const auto& tl : timelines) {
    try {
      check_timeline(tl);
      const auto r = compute_report(tl);
      csv.os() << csv_row(r) << '\n';
      ok.push_back(r);
    } catch (const Error& e) {
      std::cerr << "failed: " << tl.session_id << ": " << e.what() << '\n';
      ++failed;
    }
  }
  csv.os() << csv_aggregate_row("mean", aggregate(ok, failed)) << '\n';
  return failed ? kExitFailures : 0;
}

int cmd_verify(const std::vector<std::string>& suites) {
  int rc = 0;
  for (const auto& r : verify::run_suites(suites)) {
    std::cout << fmt::format("{} {} ({:.2f}s){}{}\n", r.passed ? "PASS" : "FAIL", r.name, r.seconds,
                             r.detail.empty() ? "" : ": ", r.detail);
    if (!r.passed) rc = kExitFailures;
  }
  return rc;
}

int cmd_serve(const RunFlags& f, const std::string& endpoint, int session_timeout, int idle_timeout) {
  AppConfig cfg = resolve(f);
  if (!endpoint.empty()) cfg.server.endpoint = endpoint;
  if (session_timeout > 0) cfg.server.session_timeout_ms = session_timeout;
  if (idle_timeout > 0) cfg.server.idle_timeout_ms = idle_timeout;
  auto corpus = require_corpus(cfg);
  ServerOptions opts;
  opts.endpoint = net::parse_endpoint(cfg.server.endpoint);
  opts.session_timeout_ms = cfg.server.session_timeout_ms;
  opts.idle_timeout_ms = cfg.server.idle_timeout_ms;
  Server server(std::move(corpus), cfg.session, opts);
  std::cerr << "listening on " << opts.endpoint.host << ":" << server.port() << std::endl;
  const auto results = server.serve();

  Output csv(cfg.output);
  csv.os() << csv_header() << '\n';
  std::vector<SessionTimeline> logs;
  int rc = 0;
  for (const auto& r : results) {
    if (r.ok) {
      csv.os() << csv_row(r.report) << '\n';
      logs.push_back(r.timeline);
    } else {
      std::cerr << "failed: " << r.id << ": " << r.error << '\n';
      rc = kExitFailures;
    }
  }
  write_logs(cfg.session_log, logs);
  return rc;
}

int cmd_connect(const RunFlags& f, const std::string& endpoint, std::size_t parallel,
                std::size_t max_sessions) {
  ClientOptions opts;
  opts.parallel = parallel;
  opts.max_sessions = max_sessions;
  if (policy_overridden(f)) opts.policy = resolve(f).session.policy;
  const auto results = connect(net::parse_endpoint(endpoint), opts);
  Output csv(f.output);
  csv.os() << csv_header() << ",metrics_match\n";
  int rc = 0;
  for (const auto& r : results) {
    if (r.ok || r.error.rfind("METRICS differ", 0) == 0) csv.os() << csv_row(r.local) << ',' << (r.ok ? 1 : 0) << '\n';
    if (!r.ok) {
      std::cerr << "failed: " << r.id << ": " << r.error << '\n';
      rc = kExitFailures;
    }
  }
  if (results.empty()) {
    std::cerr << "no sessions were served\n";
    rc = kExitFailures;
  }
  return rc;
}

int cmd_gen_corpus(const SyntheticTaskSpec& spec, std::size_t n, std::uint64_t seed,
                   const std::string& output) {
  const auto corpus = generate_corpus(spec, n, seed);
  Output out(output);
  write_corpus(out.os(), corpus);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  init_logging_from_env();
  CLI::App app{"Simultaneous speech-to-unit translation simulator"};
  app.require_subcommand(1);

  RunFlags sim_flags;
  auto* sim = app.add_subcommand("simulate", "run every utterance through a session");
  add_session_flags(sim, sim_flags);
  sim->add_option("-o,--output", sim_flags.output, "aggregate CSV (default stdout)");
  sim->add_option("--jsonl", sim_flags.jsonl, "per-utterance results");
  sim->add_option("--session-log", sim_flags.session_log, "session event log for eval");

  RunFlags sweep_flags;
  std::string sweep_param, sweep_values;
  auto* sweep = app.add_subcommand("sweep", "quality/latency over a policy grid");
  add_session_flags(sweep, sweep_flags);
  sweep->add_option("--param", sweep_param, "k | lambda")->check(CLI::IsMember({"k", "lambda"}));
  sweep->add_option("--values", sweep_values, "comma-separated grid, e.g. 1,3,5,10,15");
  sweep->add_option("-o,--output", sweep_flags.output, "CSV (default stdout)");

  std::string eval_logs, eval_out;
  auto* eval = app.add_subcommand("eval", "recompute metrics from session logs");
  eval->add_option("logs", eval_logs, "session log (JSON lines)")->required()->check(CLI::ExistingFile);
  eval->add_option("-o,--output", eval_out, "CSV (default stdout)");

  std::vector<std::string> suites;
  auto* ver = app.add_subcommand("verify", "run the brute-force oracle suites");
  ver->add_option("--suite", suites, "run only these suites");
  auto* list = ver->add_flag("--list", "list suite names");

  RunFlags serve_flags;
  std::string serve_ep;
  int serve_timeout = 0, serve_idle = 0;
  auto* serve = app.add_subcommand("serve", "stream a corpus to connecting agents");
  add_session_flags(serve, serve_flags);
  serve->add_option("--endpoint", serve_ep, "host:port (port 0 picks one)");
  serve->add_option("--session-timeout-ms", serve_timeout, "per-message timeout");
  serve->add_option("--idle-timeout-ms", serve_idle, "stop after this long without clients");
  serve->add_option("-o,--output", serve_flags.output, "per-session CSV (default stdout)");
  serve->add_option("--session-log", serve_flags.session_log, "session event log for eval");

  RunFlags conn_flags;
  std::string conn_ep = "127.0.0.1:7878";
  std::size_t conn_parallel = 1, conn_max = 0;
  auto* conn = app.add_subcommand("connect", "run the agent against a server");
  add_policy_flags(conn, conn_flags);
  conn->add_option("--endpoint", conn_ep, "host:port");
  conn->add_option("--parallel", conn_parallel, "concurrent sessions")->check(CLI::PositiveNumber);
  conn->add_option("--max-sessions", conn_max, "stop after this many sessions");
  conn->add_option("-o,--output", conn_flags.output, "per-session CSV (default stdout)");

  SyntheticTaskSpec spec;
  std::size_t gen_n = 20;
  std::uint64_t gen_seed = 0;
  std::string gen_kind = "identity", gen_out, gen_preset;
  auto* gen = app.add_subcommand("gen-corpus", "write a synthetic corpus");
  gen->add_option("-n,--num", gen_n, "utterances")->check(CLI::PositiveNumber);
  gen->add_option("--seed", gen_seed, "corpus seed");
  gen->add_option("--preset", gen_preset, "trend: the pinned noisy monotone task")
      ->check(CLI::IsMember({"trend"}));
  gen->add_option("--kind", gen_kind, "identity | shift | random_monotone");
  gen->add_option("--vocab", spec.vocab_size, "vocabulary size");
  gen->add_option("--min-len", spec.length_range.first, "minimum source length");
  gen->add_option("--max-len", spec.length_range.second, "maximum source length");
  gen->add_option("--shift", spec.shift, "alignment shift for kind=shift");
  gen->add_option("--alignment-seed", spec.alignment_seed, "seed for kind=random_monotone");
  gen->add_option("--noise", spec.noise_rate, "chance a token needs extra segments");
  gen->add_option("--src-tok-ms", spec.src_tok_ms, "duration per source token");
  gen->add_option("-o,--output", gen_out, "corpus path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (sim->parsed()) return cmd_simulate(sim_flags);
    if (sweep->parsed()) return cmd_sweep(sweep_flags, sweep_param, sweep_values);
    if (eval->parsed()) return cmd_eval(eval_logs, eval_out);
    if (ver->parsed()) {
      if (list->count()) {
        for (const auto& n : verify::suite_names()) std::cout << n << '\n';
        return 0;
      }
      return cmd_verify(suites);
    }
    if (serve->parsed()) return cmd_serve(serve_flags, serve_ep, serve_timeout, serve_idle);
    if (conn->parsed()) return cmd_connect(conn_flags, conn_ep, conn_parallel, conn_max);
    if (gen->parsed()) {
      if (gen_preset == "trend") {
        const auto pinned = verify::trend_task_spec();
        spec = pinned;
        if (gen_seed == 0) gen_seed = verify::kTrendCorpusSeed;
      } else {
        spec.alignment_kind = parse_alignment_kind(gen_kind);
      }
      return cmd_gen_corpus(spec, gen_n, gen_seed, gen_out);
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailures;
  }
  return 0;
}
