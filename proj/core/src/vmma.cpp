#include "simulst/vmma.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "simulst/error.hpp"
#include "simulst/rng.hpp"

namespace simulst {

namespace {

double clamp_prob(double p, std::size_t& clamped) {
  if (p < kProbClamp) {
    ++clamped;
    return kProbClamp;
  }
  if (p > 1.0 - kProbClamp) {
    ++clamped;
    return 1.0 - kProbClamp;
  }
  return p;
}

void check_shape(const PolicyProbTable& t, std::size_t m, std::size_t n, const char* what) {
  if (t.source_len() != m || t.target_len() != n)
    throw ShapeError(std::string(what) + " table is " + std::to_string(t.target_len()) + "x" +
                     std::to_string(t.source_len()) + ", expected " + std::to_string(n) + "x" +
                     std::to_string(m));
}

double sigmoid(double x) {
  return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

// Visits every non-forced step of `trace` as (target index, segments read, action).
template <typename Fn>
void for_each_decision(const ActionTrace& trace, Fn&& fn) {
  std::size_t written = 0, read = 0;
  for (std::size_t k = 0; k < trace.size(); ++k) {
    if (!trace.forced(k)) fn(written, read, trace[k]);
    (trace[k] == Action::Read ? read : written)++;
  }
}

double log_sum_exp(const std::vector<double>& xs) {
  double hi = -std::numeric_limits<double>::infinity();
  for (double x : xs) hi = std::max(hi, x);
  if (!std::isfinite(hi)) return hi;
  double s = 0.0;
  for (double x : xs) s += std::exp(x - hi);
  return hi + std::log(s);
}

}  // namespace

ConstantScorer::ConstantScorer(double value) : value_(value) {
  if (!(value > 0.0 && value < 1.0)) throw ConfigError("constant scorer must lie in (0,1)");
}

OracleScorer::OracleScorer(const Utterance& utt, double ready, double waiting)
    : need_(utt.oracle_alignment), ready_(ready), waiting_(waiting) {
  if (!(ready > 0.0 && ready < 1.0 && waiting > 0.0 && waiting < 1.0))
    throw ConfigError("oracle scorer levels must lie in (0,1)");
}

double OracleScorer::score(std::size_t written, std::size_t read) const {
  if (written >= need_.size()) return waiting_;
  return read >= need_[written] ? ready_ : waiting_;
}

PolicyProbTable::PolicyProbTable(Matrix values, TableRole role)
    : values_(std::move(values)), role_(role) {
  if (values_.rows() == 0 || values_.cols() == 0)
    throw ShapeError("policy table must be non-empty");
  for (std::size_t i = 0; i < values_.rows(); ++i)
    for (std::size_t j = 0; j < values_.cols(); ++j) {
      const double v = values_(i, j);
      if (!(v >= 0.0 && v <= 1.0))
        throw ConfigError("policy table entry (" + std::to_string(i) + "," + std::to_string(j) +
                          ") = " + std::to_string(v) + " is not a probability");
    }
}

TableScorer::TableScorer(PolicyProbTable table) : table_(std::move(table)) {}

double TableScorer::score(std::size_t written, std::size_t read) const {
  const std::size_t i = std::min(written, table_.target_len() - 1);
  const std::size_t j = std::clamp<std::size_t>(read, 1, table_.source_len());
  return std::clamp(table_.write_prob(i, j), kProbClamp, 1.0 - kProbClamp);
}

double change_probability(double lambda, std::size_t k, std::size_t last_change, double score) {
  const double gap = static_cast<double>(k) - static_cast<double>(last_change);
  return -std::expm1(-lambda * gap * gap) * score;
}

ChangeProcess::ChangeProcess(double lambda, std::uint64_t seed)
    : lambda_(lambda), rng_(make_engine(seed)) {
  if (!(lambda > 0.0)) throw ConfigError("lambda must be positive");
}

Action ChangeProcess::step(const PolicyScorer& scorer, std::size_t written, std::size_t read,
                           bool must_read, bool must_write) {
  ++k_;
  Action next = prev_;
  bool forced = true;
  if (k_ == 1 || must_read) {
    next = Action::Read;
  } else if (must_write) {
    next = Action::Write;
  } else {
    forced = false;
    const double p = change_probability(lambda_, k_, last_change_, scorer.score(written, read));
    if (unit_(rng_) < p) next = prev_ == Action::Read ? Action::Write : Action::Read;
  }
  const bool changed = k_ > 1 && next != prev_;
  if (changed) last_change_ = k_;
  trace_.changes.push_back(changed ? 1 : 0);
  trace_.forced.push_back(forced);
  prev_ = next;
  return next;
}

ChangeTrace sample_change_trace(const PolicyScorer& scorer, double lambda, std::size_t src_len,
                                std::size_t tgt_len, std::uint64_t seed) {
  if (src_len == 0) throw ConfigError("sample_change_trace: empty source");
  ChangeProcess proc(lambda, seed);
  std::size_t written = 0, read = 0;
  while (written < tgt_len || read < src_len) {
    const Action a =
        proc.step(scorer, written, read, written == tgt_len, read == src_len);
    (a == Action::Read ? read : written)++;
  }
  return proc.changes();
}

ActionTrace sample_trace(const PolicyProbTable& table, std::mt19937_64& rng) {
  const std::size_t n = table.target_len(), m = table.source_len();
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Action> acts;
  acts.reserve(n + m);
  std::size_t written = 0, read = 0;
  while (written < n || read < m) {
    Action a;
    if (read == 0 || written == n)
      a = Action::Read;
    else if (read == m)
      a = Action::Write;
    else
      a = unit(rng) < table.write_prob(written, read) ? Action::Write : Action::Read;
    acts.push_back(a);
    (a == Action::Read ? read : written)++;
  }
  return ActionTrace(std::move(acts));
}

LogValue trace_log_prob(const ActionTrace& trace, const PolicyProbTable& table) {
  check_shape(table, trace.source_len(), trace.target_len(), "policy");
  LogValue out;
  for_each_decision(trace, [&](std::size_t i, std::size_t j, Action a) {
    const double p = clamp_prob(table.write_prob(i, j), out.clamped);
    out.value += a == Action::Write ? std::log(p) : std::log1p(-p);
  });
  return out;
}

LogValue path_log_ratio(const ActionTrace& trace, const PolicyProbTable& phi,
                        const PolicyProbTable& omega) {
  check_shape(phi, trace.source_len(), trace.target_len(), "posterior");
  check_shape(omega, trace.source_len(), trace.target_len(), "prior");
  LogValue out;
  for_each_decision(trace, [&](std::size_t i, std::size_t j, Action a) {
    const double q = clamp_prob(phi.write_prob(i, j), out.clamped);
    const double p = clamp_prob(omega.write_prob(i, j), out.clamped);
    out.value += a == Action::Write ? std::log(q) - std::log(p)
                                    : std::log1p(-q) - std::log1p(-p);
  });
  return out;
}

TraceLikelihood tabular_likelihood(Matrix log_probs) {
  return [table = std::move(log_probs)](const Utterance&, const ActionTrace& trace) {
    const auto cons = trace.consumption();
    if (cons.size() != table.rows())
      throw ShapeError("tabular likelihood: trace has " + std::to_string(cons.size()) +
                       " targets, table has " + std::to_string(table.rows()));
    double s = 0.0;
    for (std::size_t i = 0; i < cons.size(); ++i) s += table(i, cons[i] - 1);
    return s;
  };
}

ElboEstimate estimate_elbo(const Utterance& utt, const TraceLikelihood& likelihood,
                           const PolicyProbTable& phi, const PolicyProbTable& omega,
                           std::size_t n_samples, std::uint64_t seed) {
  if (n_samples == 0) throw ConfigError("estimate_elbo requires n_samples >= 1");
  check_shape(phi, utt.source_len(), utt.target_len(), "posterior");
  check_shape(omega, utt.source_len(), utt.target_len(), "prior");

  auto rng = make_engine(seed);
  // Welford accumulators for the log-ratio and the per-sample ELBO term.
  double kl_mean = 0.0, kl_m2 = 0.0, ll_mean = 0.0, el_mean = 0.0, el_m2 = 0.0;
  ElboEstimate est;
  for (std::size_t s = 0; s < n_samples; ++s) {
    const ActionTrace trace = sample_trace(phi, rng);
    const double ll = likelihood(utt, trace);
    if (!std::isfinite(ll))
      throw EvaluationError("non-finite likelihood at sample " + std::to_string(s), s);
    const LogValue lr = path_log_ratio(trace, phi, omega);
    est.clamped += lr.clamped;
    const double cnt = static_cast<double>(s + 1);
    const double dk = lr.value - kl_mean;
    kl_mean += dk / cnt;
    kl_m2 += dk * (lr.value - kl_mean);
    ll_mean += (ll - ll_mean) / cnt;
    const double term = ll - lr.value;
    const double de = term - el_mean;
    el_mean += de / cnt;
    el_m2 += de * (term - el_mean);
  }
  const double n = static_cast<double>(n_samples);
  est.kl_estimate = kl_mean;
  est.loglik_estimate = ll_mean;
  est.elbo = ll_mean - kl_mean;
  if (n_samples > 1) {
    est.kl_stderr = std::sqrt(kl_m2 / (n - 1.0) / n);
    est.elbo_stderr = std::sqrt(el_m2 / (n - 1.0) / n);
  }
  return est;
}

PolicyProbTable diagonal_prior(std::size_t src_len, std::size_t tgt_len, double sharpness) {
  if (!(sharpness > 0.0)) throw ConfigError("diagonal prior sharpness must be positive");
  if (src_len == 0 || tgt_len == 0) throw ShapeError("diagonal prior needs non-empty shape");
  Matrix w(tgt_len, src_len);
  const double ratio = static_cast<double>(src_len) / static_cast<double>(tgt_len);
  for (std::size_t i = 1; i <= tgt_len; ++i)
    for (std::size_t j = 1; j <= src_len; ++j) {
      const double x = sharpness * (static_cast<double>(j) - static_cast<double>(i) * ratio);
      w(i - 1, j - 1) = std::clamp(sigmoid(x), kProbClamp, 1.0 - kProbClamp);
    }
  return PolicyProbTable(std::move(w), TableRole::Prior);
}

namespace oracle {

double exact_elbo(const Utterance& utt, const TraceLikelihood& likelihood,
                  const PolicyProbTable& phi, const PolicyProbTable& omega) {
  double total = 0.0;
  for (const auto& trace : enumerate_traces(utt.source_len(), utt.target_len(), 200'000)) {
    const double log_q = trace_log_prob(trace, phi).value;
    const double term = likelihood(utt, trace) - path_log_ratio(trace, phi, omega).value;
    total += std::exp(log_q) * term;
  }
  return total;
}

double exact_log_marginal(const Utterance& utt, const TraceLikelihood& likelihood,
                          const PolicyProbTable& omega) {
  std::vector<double> terms;
  for (const auto& trace : enumerate_traces(utt.source_len(), utt.target_len(), 200'000))
    terms.push_back(trace_log_prob(trace, omega).value + likelihood(utt, trace));
  return log_sum_exp(terms);
}

}  // namespace oracle

void to_json(nlohmann::json& j, const PolicyProbTable& t) {
  j = nlohmann::json{{"role", t.role() == TableRole::Prior ? "prior" : "posterior"},
                     {"values", t.values()}};
}

void from_json(const nlohmann::json& j, PolicyProbTable& t) {
  const auto role = j.value("role", std::string("posterior")) == "prior" ? TableRole::Prior
                                                                        : TableRole::Posterior;
  t = PolicyProbTable(j.at("values").get<Matrix>(), role);
}

}  // namespace simulst
