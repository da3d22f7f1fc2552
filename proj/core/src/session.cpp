#include "simulst/session.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <thread>

#include "simulst/distill.hpp"
#include "simulst/error.hpp"
#include "simulst/rng.hpp"
#include "simulst/vmma.hpp"
#include "spdlog/spdlog.h"

namespace simulst {

using nlohmann::json;

namespace {

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::size_t infer_vocab(const Utterance& utt) {
  Token hi = 1;
  for (Token t : utt.source) hi = std::max(hi, t);
  for (Token t : utt.target) hi = std::max(hi, t);
  return static_cast<std::size_t>(hi) + 1;
}

std::string policy_kind_name(PolicyKind k) {
  switch (k) {
    case PolicyKind::WaitK: return "waitk";
    case PolicyKind::Vmma: return "vmma";
    case PolicyKind::Offline: return "offline";
  }
  return "unknown";
}

std::string scorer_name(ScorerKind k) {
  switch (k) {
    case ScorerKind::Oracle: return "oracle";
    case ScorerKind::Diagonal: return "diagonal";
    case ScorerKind::Label: return "label";
    case ScorerKind::Constant: return "constant";
  }
  return "unknown";
}

[[noreturn]] void bad(const std::string& ptr, const std::string& msg) {
  throw ConfigError(ptr + ": " + msg);
}

const json* member(const json& j, const std::string& ptr, const char* key) {
  if (!j.is_object()) bad(ptr, "expected an object");
  auto it = j.find(key);
  return it == j.end() ? nullptr : &*it;
}

double get_number(const json& v, const std::string& ptr) {
  if (!v.is_number()) bad(ptr, "expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) bad(ptr, "expected a finite number");
  return d;
}

std::size_t get_count(const json& v, const std::string& ptr) {
  if (!v.is_number_integer() || v.get<std::int64_t>() < 0)
    bad(ptr, "expected a non-negative integer");
  return v.get<std::size_t>();
}

void check_keys(const json& j, const std::string& ptr, std::initializer_list<const char*> keys) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    const bool known = std::any_of(keys.begin(), keys.end(),
                                   [&](const char* k) { return it.key() == k; });
    if (!known) bad(ptr + "/" + it.key(), "unknown key");
  }
}

/// Change-of-action score for the V-MMA agent: the readiness score when the
/// current run is READ, its complement when the current run is WRITE.
class DirectionalScorer final : public PolicyScorer {
 public:
  DirectionalScorer(const PolicyScorer& base, const Action& prev) : base_(base), prev_(prev) {}
  double score(std::size_t written, std::size_t read) const override {
    const double s = base_.score(written, read);
    const double v = prev_ == Action::Read ? s : 1.0 - s;
    return std::clamp(v, kProbClamp, 1.0 - kProbClamp);
  }

 private:
  const PolicyScorer& base_;
  const Action& prev_;
};

}  // namespace

std::string PolicySpec::label() const {
  switch (kind) {
    case PolicyKind::WaitK: return "waitk:k=" + std::to_string(k);
    case PolicyKind::Vmma: {
      char buf[64];
      std::snprintf(buf, sizeof buf, "vmma:lambda=%g", lambda);
      return buf + std::string(";scorer=") + scorer_name(scorer);
    }
    case PolicyKind::Offline: return "offline";
  }
  return "unknown";
}

Micros SessionConfig::segment_us(const Utterance& utt) const {
  return ms_to_us(pre_decision_ms > 0.0 ? pre_decision_ms : utt.src_tok_ms);
}

void validate(const SessionConfig& c) {
  if (!(c.pre_decision_ms >= 0.0) || !std::isfinite(c.pre_decision_ms))
    bad("/pre_decision_ms", "must be non-negative (0 selects the utterance default)");
  if (!(c.unit_ms > 0.0) || !std::isfinite(c.unit_ms)) bad("/unit_ms", "must be positive");
  if (c.emission_rate == 0) bad("/emission_rate", "must be >= 1");
  if (c.units_per_token == 0) bad("/units_per_token", "must be >= 1");
  if (!(c.compute.per_decision_ms >= 0.0))
    bad("/compute/per_decision_ms", "must be non-negative");
  if (!(c.compute.per_unit_ms >= 0.0)) bad("/compute/per_unit_ms", "must be non-negative");
  if (!(c.time_scale > 0.0) || !std::isfinite(c.time_scale)) bad("/time_scale", "must be positive");
  const auto& p = c.policy;
  if (p.kind == PolicyKind::WaitK && p.k == 0) bad("/policy/k", "wait-k needs k >= 1");
  if (p.kind == PolicyKind::Vmma) {
    if (!(p.lambda > 0.0) || !std::isfinite(p.lambda)) bad("/policy/lambda", "must be positive");
    if (p.scorer == ScorerKind::Constant && !(p.constant > 0.0 && p.constant < 1.0))
      bad("/policy/constant", "must lie in (0,1)");
    if (p.scorer == ScorerKind::Label && p.rank_threshold == 0)
      bad("/policy/rank_threshold", "must be >= 1");
  }
}

void to_json(json& j, const SessionConfig& c) {
  json pol{{"kind", policy_kind_name(c.policy.kind)}};
  switch (c.policy.kind) {
    case PolicyKind::WaitK: pol["k"] = c.policy.k; break;
    case PolicyKind::Vmma:
      pol["lambda"] = c.policy.lambda;
      pol["scorer"] = scorer_name(c.policy.scorer);
      pol["sharpness"] = c.policy.sharpness;
      pol["constant"] = c.policy.constant;
      pol["rank_threshold"] = c.policy.rank_threshold;
      pol["seed"] = c.policy.seed;
      break;
    case PolicyKind::Offline: break;
  }
  j = json{{"policy", pol},
           {"pre_decision_ms", c.pre_decision_ms},
           {"unit_ms", c.unit_ms},
           {"units_per_token", c.units_per_token},
           {"compute",
            {{"model", c.compute.kind == ComputeKind::FixedCost ? "fixed_cost" : "measured_wallclock"},
             {"per_decision_ms", c.compute.per_decision_ms},
             {"per_unit_ms", c.compute.per_unit_ms}}},
           {"realtime", c.realtime},
           {"time_scale", c.time_scale},
           {"vocab_size", c.vocab_size}};
  if (c.emission_rate == kEmitAtEnd)
    j["emission_rate"] = "inf";
  else
    j["emission_rate"] = c.emission_rate;
}

void from_json(const json& j, SessionConfig& c) {
  const std::string root;
  check_keys(j, root, {"policy", "pre_decision_ms", "emission_rate", "unit_ms", "units_per_token",
                       "compute", "realtime", "time_scale", "vocab_size"});
  if (const json* p = member(j, root, "policy")) {
    const std::string pp = "/policy";
    check_keys(*p, pp, {"kind", "k", "lambda", "scorer", "sharpness", "constant",
                        "rank_threshold", "seed"});
    if (const json* v = member(*p, pp, "kind")) {
      if (!v->is_string()) bad(pp + "/kind", "expected a string");
      const auto s = v->get<std::string>();
      if (s == "waitk") c.policy.kind = PolicyKind::WaitK;
      else if (s == "vmma") c.policy.kind = PolicyKind::Vmma;
      else if (s == "offline") c.policy.kind = PolicyKind::Offline;
      else bad(pp + "/kind", "expected one of waitk, vmma, offline");
    }
    if (const json* v = member(*p, pp, "k")) c.policy.k = get_count(*v, pp + "/k");
    if (const json* v = member(*p, pp, "lambda")) c.policy.lambda = get_number(*v, pp + "/lambda");
    if (const json* v = member(*p, pp, "scorer")) {
      if (!v->is_string()) bad(pp + "/scorer", "expected a string");
      const auto s = v->get<std::string>();
      if (s == "oracle") c.policy.scorer = ScorerKind::Oracle;
      else if (s == "diagonal") c.policy.scorer = ScorerKind::Diagonal;
      else if (s == "label") c.policy.scorer = ScorerKind::Label;
      else if (s == "constant") c.policy.scorer = ScorerKind::Constant;
      else bad(pp + "/scorer", "expected one of oracle, diagonal, label, constant");
    }
    if (const json* v = member(*p, pp, "sharpness"))
      c.policy.sharpness = get_number(*v, pp + "/sharpness");
    if (const json* v = member(*p, pp, "constant"))
      c.policy.constant = get_number(*v, pp + "/constant");
    if (const json* v = member(*p, pp, "rank_threshold"))
      c.policy.rank_threshold = get_count(*v, pp + "/rank_threshold");
    if (const json* v = member(*p, pp, "seed")) c.policy.seed = get_count(*v, pp + "/seed");
  }
  if (const json* v = member(j, root, "pre_decision_ms"))
    c.pre_decision_ms = get_number(*v, "/pre_decision_ms");
  if (const json* v = member(j, root, "emission_rate")) {
    if (v->is_string() && (v->get<std::string>() == "inf" || v->get<std::string>() == "end"))
      c.emission_rate = kEmitAtEnd;
    else
      c.emission_rate = get_count(*v, "/emission_rate");
  }
  if (const json* v = member(j, root, "unit_ms")) c.unit_ms = get_number(*v, "/unit_ms");
  if (const json* v = member(j, root, "units_per_token"))
    c.units_per_token = get_count(*v, "/units_per_token");
  if (const json* v = member(j, root, "compute")) {
    const std::string cp = "/compute";
    check_keys(*v, cp, {"model", "per_decision_ms", "per_unit_ms"});
    if (const json* m = member(*v, cp, "model")) {
      if (!m->is_string()) bad(cp + "/model", "expected a string");
      const auto s = m->get<std::string>();
      if (s == "fixed_cost") c.compute.kind = ComputeKind::FixedCost;
      else if (s == "measured_wallclock") c.compute.kind = ComputeKind::MeasuredWallclock;
      else bad(cp + "/model", "expected fixed_cost or measured_wallclock");
    }
    if (const json* m = member(*v, cp, "per_decision_ms"))
      c.compute.per_decision_ms = get_number(*m, cp + "/per_decision_ms");
    if (const json* m = member(*v, cp, "per_unit_ms"))
      c.compute.per_unit_ms = get_number(*m, cp + "/per_unit_ms");
  }
  if (const json* v = member(j, root, "realtime")) {
    if (!v->is_boolean()) bad("/realtime", "expected a boolean");
    c.realtime = v->get<bool>();
  }
  if (const json* v = member(j, root, "time_scale")) c.time_scale = get_number(*v, "/time_scale");
  if (const json* v = member(j, root, "vocab_size")) c.vocab_size = get_count(*v, "/vocab_size");
  validate(c);
}

WaitKPolicy::WaitKPolicy(std::size_t k) : k_(k) {
  if (k == 0) throw ConfigError("wait-k needs k >= 1");
}

Action WaitKPolicy::decide(const AgentState& s) {
  return s.source_finished || s.read >= k_ + s.written ? Action::Write : Action::Read;
}

Action OfflinePolicy::decide(const AgentState& s) {
  return s.source_finished ? Action::Write : Action::Read;
}

VmmaPolicy::VmmaPolicy(std::unique_ptr<PolicyScorer> scorer, double lambda, std::uint64_t seed)
    : scorer_(std::move(scorer)), process_(std::make_unique<ChangeProcess>(lambda, seed)) {}

VmmaPolicy::~VmmaPolicy() = default;

Action VmmaPolicy::decide(const AgentState& s) {
  const DirectionalScorer directed(*scorer_, prev_);
  prev_ = process_->step(directed, s.written, s.read, s.written >= s.tgt_len, s.source_finished);
  return prev_;
}

std::uint64_t session_seed(const PolicySpec& spec, const Utterance& utt) {
  return splitmix64(spec.seed ^ splitmix64(fnv1a(utt.id)));
}

std::unique_ptr<Policy> make_policy(const PolicySpec& spec, const Utterance& utt,
                                    std::size_t vocab_size) {
  switch (spec.kind) {
    case PolicyKind::WaitK: return std::make_unique<WaitKPolicy>(spec.k);
    case PolicyKind::Offline: return std::make_unique<OfflinePolicy>();
    case PolicyKind::Vmma: break;
  }
  const std::size_t m = utt.source_len(), n = utt.target_len();
  std::unique_ptr<PolicyScorer> scorer;
  switch (spec.scorer) {
    case ScorerKind::Oracle: scorer = std::make_unique<OracleScorer>(utt); break;
    case ScorerKind::Diagonal:
      scorer = std::make_unique<TableScorer>(diagonal_prior(m, n, spec.sharpness));
      break;
    case ScorerKind::Label: {
      const SyntheticRankOracle oracle(utt, vocab_size ? vocab_size : infer_vocab(utt));
      std::vector<std::size_t> probes(m);
      for (std::size_t L = 1; L <= m; ++L) probes[L - 1] = L;
      const auto table = extract_offline_policy(oracle, probes, spec.rank_threshold, n);
      scorer = std::make_unique<TableScorer>(offline_label_prior(table, m, n));
      break;
    }
    case ScorerKind::Constant: scorer = std::make_unique<ConstantScorer>(spec.constant); break;
  }
  return std::make_unique<VmmaPolicy>(std::move(scorer), spec.lambda, session_seed(spec, utt));
}

OracleTranslator::OracleTranslator(const Utterance& utt, std::size_t vocab_size)
    : target_(utt.target),
      need_(utt.oracle_alignment),
      vocab_(vocab_size ? vocab_size : infer_vocab(utt)) {
  if (need_.size() != target_.size()) throw ConfigError("utterance lacks an oracle alignment");
}

Token OracleTranslator::predict(std::size_t index, std::size_t read) {
  if (index >= target_.size()) throw ProtocolError("translator asked past the target end");
  const Token ref = target_[index];
  if (read >= need_[index] || vocab_ < 2) return ref;
  const auto off = 1 + splitmix64((static_cast<std::uint64_t>(index) << 32) ^ read) % (vocab_ - 1);
  return static_cast<Token>((static_cast<std::uint64_t>(ref) + off) % vocab_);
}

double StubVocoder::synthesize(std::span<const std::int64_t> units) {
  for (auto u : units) sink_ = splitmix64(sink_ ^ static_cast<std::uint64_t>(u));
  return unit_ms_ * static_cast<double>(units.size());
}

namespace {

std::int64_t steady_ns() {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

}  // namespace

LocalSource::LocalSource(const Utterance& utt, Micros segment_us, bool realtime, double time_scale)
    : utt_(utt),
      segment_us_(segment_us),
      realtime_(realtime),
      time_scale_(time_scale),
      start_ns_(steady_ns()) {}

std::optional<Segment> LocalSource::fetch(std::size_t index) {
  if (index == 0 || index > utt_.source_len()) return std::nullopt;
  Segment s;
  s.index = index;
  s.tokens = {utt_.source[index - 1]};
  s.arrival_us = segment_us_ * static_cast<Micros>(index);
  s.last = index == utt_.source_len();
  if (realtime_) {
    const auto due = start_ns_ + static_cast<std::int64_t>(
                                     static_cast<double>(s.arrival_us) * 1000.0 * time_scale_);
    const auto now = steady_ns();
    if (due > now) std::this_thread::sleep_for(std::chrono::nanoseconds(due - now));
  }
  return s;
}

SessionTimeline run_agent_loop(const Utterance& utt, const SessionConfig& config, Policy& agent,
                               Translator& translator, Vocoder& vocoder, SourceChannel& source,
                               UnitSink* sink) {
  validate(config);
  if (utt.source.empty() || utt.target.empty())
    throw ConfigError("utterance '" + utt.id + "' is empty");

  const std::size_t upt = config.units_per_token;
  const bool measured = config.compute.kind == ComputeKind::MeasuredWallclock;
  const Micros decision_cost = ms_to_us(config.compute.per_decision_ms);
  const double per_unit_ms = config.compute.per_unit_ms;
  TimelineBuilder builder(utt.id, utt, config.segment_us(utt), ms_to_us(config.unit_ms), upt,
                          config.emission_rate);

  const std::int64_t start_ns = steady_ns();
  auto real_now = [&]() -> Micros {
    return static_cast<Micros>(static_cast<double>(steady_ns() - start_ns) / 1000.0 /
                               config.time_scale);
  };
  auto elapsed_since = [](std::int64_t t0) -> Micros { return (steady_ns() - t0) / 1000; };

  AgentState st;
  st.tgt_len = utt.target_len();
  Micros sim = 0, wall = 0;
  std::vector<std::int64_t> batch;

  auto settle_wall = [&] {
    if (config.realtime) wall = std::max(wall, real_now());
  };
  auto synthesize = [&]() -> Micros {
    const auto t0 = steady_ns();
    const auto n = static_cast<double>(batch.size());
    vocoder.synthesize(batch);
    wall += measured ? elapsed_since(t0) : ms_to_us(per_unit_ms * n);
    settle_wall();
    builder.vocoder(sim, wall);
    batch.clear();
    return wall;
  };

  while (st.written < st.tgt_len) {
    const auto t0 = steady_ns();
    Action a = agent.decide(st);
    if (a == Action::Read && st.source_finished) a = Action::Write;

    if (a == Action::Read) {
      const Micros think = measured ? elapsed_since(t0) : decision_cost;
      auto seg = source.fetch(st.read + 1);
      if (!seg) {
        st.source_finished = true;
        continue;
      }
      sim = std::max(sim, seg->arrival_us);
      wall = std::max(wall, seg->arrival_us) + think;
      settle_wall();
      builder.segment(seg->index, seg->arrival_us, sim, wall);
      if (sink) sink->on_read(seg->index, seg->arrival_us, sim, wall);
      st.read = seg->index;
      if (seg->last) st.source_finished = true;
      continue;
    }

    const Token token = translator.predict(st.written, st.read);
    wall += measured ? elapsed_since(t0) : decision_cost;
    settle_wall();
    for (std::size_t u = 0; u < upt; ++u) {
      const std::int64_t id = unit_id(token, u, upt);
      const std::size_t index = st.written * upt + u;
      const Micros unit_wall = wall;
      batch.push_back(id);
      std::optional<Micros> done;
      if (builder.unit(st.written, token, id, sim, unit_wall)) done = synthesize();
      if (sink) sink->on_unit(st.written, id, index, sim, unit_wall, done);
    }
    ++st.written;
  }

  std::optional<Micros> flush;
  if (!batch.empty()) flush = synthesize();
  if (sink) sink->on_finish(sim, wall, flush);
  SessionTimeline tl = builder.finish(sim, wall);
  check_timeline(tl);
  spdlog::debug("session {}: {} reads, {} tokens", utt.id, st.read, st.written);
  return tl;
}

SessionTimeline run_session(const Utterance& utt, const SessionConfig& config, Policy& agent) {
  OracleTranslator translator(utt, config.vocab_size);
  StubVocoder vocoder(config.unit_ms);
  LocalSource source(utt, config.segment_us(utt), config.realtime, config.time_scale);
  return run_agent_loop(utt, config, agent, translator, vocoder, source);
}

SessionTimeline run_session(const Utterance& utt, const SessionConfig& config) {
  validate(config);
  auto agent = make_policy(config.policy, utt, config.vocab_size);
  return run_session(utt, config, *agent);
}

}  // namespace simulst
