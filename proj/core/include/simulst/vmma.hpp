#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <random>

#include "simulst/corpus.hpp"
#include "simulst/matrix.hpp"
#include "simulst/trace.hpp"

namespace simulst {

/// Context score f(X_:i, Y_:j) in (0,1), evaluated with `written` target
/// tokens emitted and `read` source segments consumed.
class PolicyScorer {
 public:
  virtual ~PolicyScorer() = default;
  virtual double score(std::size_t written, std::size_t read) const = 0;
};

class ConstantScorer final : public PolicyScorer {
 public:
  explicit ConstantScorer(double value);
  double score(std::size_t, std::size_t) const override { return value_; }

 private:
  double value_;
};

/// High score once the next target token's oracle prefix is available.
class OracleScorer final : public PolicyScorer {
 public:
  explicit OracleScorer(const Utterance& utt, double ready = 0.95, double waiting = 0.05);
  double score(std::size_t written, std::size_t read) const override;

 private:
  std::vector<std::size_t> need_;
  double ready_, waiting_;
};

enum class TableRole { Posterior, Prior };

/// Per-decision Bernoulli write probabilities, N x M, indexed with 0-based
/// (target, source-1): entry (i, j) is the chance of writing target i+1 after
/// j+1 segments were read.
class PolicyProbTable {
 public:
  PolicyProbTable() = default;
  /// Entries must be finite and in [0,1]; ShapeError/ConfigError otherwise.
  PolicyProbTable(Matrix values, TableRole role);

  const Matrix& values() const noexcept { return values_; }
  TableRole role() const noexcept { return role_; }
  std::size_t target_len() const noexcept { return values_.rows(); }
  std::size_t source_len() const noexcept { return values_.cols(); }
  double write_prob(std::size_t target, std::size_t read) const {
    return values_(target, read - 1);
  }

 private:
  Matrix values_;
  TableRole role_ = TableRole::Posterior;
};

class TableScorer final : public PolicyScorer {
 public:
  explicit TableScorer(PolicyProbTable table);
  double score(std::size_t written, std::size_t read) const override;

 private:
  PolicyProbTable table_;
};

/// p*_k = (1 - exp(-lambda (k - k')^2)) * score.
double change_probability(double lambda, std::size_t k, std::size_t last_change, double score);

/// Online sampler for the change-of-action process. One instance per session;
/// it owns its generator so concurrent sessions never share state.
class ChangeProcess {
 public:
  ChangeProcess(double lambda, std::uint64_t seed);

  /// Decide the next action. `must_write`: source exhausted; `must_read`:
  /// target quota reached. The first call always returns READ.
  Action step(const PolicyScorer& scorer, std::size_t written, std::size_t read,
              bool must_read, bool must_write);

  std::size_t steps() const noexcept { return k_; }
  const ChangeTrace& changes() const noexcept { return trace_; }

 private:
  double lambda_;
  std::mt19937_64 rng_;
  std::uniform_real_distribution<double> unit_{0.0, 1.0};
  std::size_t k_ = 0;
  std::size_t last_change_ = 1;
  Action prev_ = Action::Read;
  ChangeTrace trace_;
};

/// Sample z* over exactly M + N decisions; forced steps are marked.
ChangeTrace sample_change_trace(const PolicyScorer& scorer, double lambda, std::size_t src_len,
                                std::size_t tgt_len, std::uint64_t seed);

/// Sample a trace from the stepwise Bernoulli process defined by `table`.
ActionTrace sample_trace(const PolicyProbTable& table, std::mt19937_64& rng);

inline constexpr double kProbClamp = 1e-7;

struct LogValue {
  double value = 0.0;
  std::size_t clamped = 0;  // visited entries that hit the [1e-7, 1-1e-7] clamp
};

/// log P_theta(trace) over non-forced steps.
LogValue trace_log_prob(const ActionTrace& trace, const PolicyProbTable& table);

/// log q_phi(trace) - log p_omega(trace).
LogValue path_log_ratio(const ActionTrace& trace, const PolicyProbTable& phi,
                        const PolicyProbTable& omega);

using TraceLikelihood = std::function<double(const Utterance&, const ActionTrace&)>;

/// log p(Y | X, alpha) = sum_i log table(i, a_i) for a tabular model.
TraceLikelihood tabular_likelihood(Matrix log_probs);

struct ElboEstimate {
  double elbo = 0.0;
  double kl_estimate = 0.0;
  double loglik_estimate = 0.0;
  double kl_stderr = 0.0;
  double elbo_stderr = 0.0;
  std::size_t clamped = 0;
};

/// Monte Carlo ELBO over `n_samples` traces drawn from phi; deterministic in
/// `seed`. Throws EvaluationError naming the first non-finite sample.
ElboEstimate estimate_elbo(const Utterance& utt, const TraceLikelihood& likelihood,
                           const PolicyProbTable& phi, const PolicyProbTable& omega,
                           std::size_t n_samples, std::uint64_t seed);

/// omega(i,j) = sigmoid(sharpness * (j - i*M/N)), 1-based, clamped into (0,1).
PolicyProbTable diagonal_prior(std::size_t src_len, std::size_t tgt_len, double sharpness);

namespace oracle {

/// Exact ELBO by enumerating every trace (small instances only).
double exact_elbo(const Utterance& utt, const TraceLikelihood& likelihood,
                  const PolicyProbTable& phi, const PolicyProbTable& omega);

/// log sum_trace p_omega(trace) p(Y | X, trace).
double exact_log_marginal(const Utterance& utt, const TraceLikelihood& likelihood,
                          const PolicyProbTable& omega);

}  // namespace oracle

void to_json(nlohmann::json& j, const PolicyProbTable& t);
void from_json(const nlohmann::json& j, PolicyProbTable& t);

}  // namespace simulst
