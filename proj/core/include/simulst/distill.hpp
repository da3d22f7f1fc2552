#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "simulst/corpus.hpp"
#include "simulst/vmma.hpp"

namespace simulst {

/// rank(L, j): rank of reference token j (0-based) among the vocabulary when an
/// offline model sees a source prefix of length L. Ranks start at 1.
class OfflineLikelihoodOracle {
 public:
  virtual ~OfflineLikelihoodOracle() = default;
  virtual std::size_t rank(std::size_t prefix_len, std::size_t target_index) const = 0;
};

/// Ranks the reference token first once the prefix covers its oracle
/// alignment, and far down the vocabulary before that. Non-increasing in L.
class SyntheticRankOracle final : public OfflineLikelihoodOracle {
 public:
  SyntheticRankOracle(const Utterance& utt, std::size_t vocab_size);
  std::size_t rank(std::size_t prefix_len, std::size_t target_index) const override;

 private:
  std::vector<std::size_t> need_;
  std::size_t vocab_size_;
};

struct OfflinePolicyTable {
  std::size_t rank_threshold = 1;
  std::vector<std::size_t> prefix_lengths;  // L_j, 1-based

  friend bool operator==(const OfflinePolicyTable&, const OfflinePolicyTable&) = default;
};

/// L_j = smallest probe length whose rank is <= r, or M when none qualifies.
/// The probe grid must be non-empty, strictly increasing and end at M.
OfflinePolicyTable extract_offline_policy(const OfflineLikelihoodOracle& oracle,
                                          std::span<const std::size_t> probe_lengths,
                                          std::size_t rank_threshold, std::size_t tgt_len);

struct AuxLoss {
  double value = 0.0;
  bool degenerate = false;  // empty segment
};

/// -sum of attention mass over source positions (prev, cur], 1-based.
AuxLoss aux_attention_loss(std::span<const double> attention_row, std::size_t prev,
                           std::size_t cur);

inline constexpr double kLabelSmoothing = 1e-3;

/// Hard labels A[i][L_i - 1] = 1, smoothed and normalised per target row, then
/// turned into write probabilities by cumulative mass along the source.
PolicyProbTable offline_label_prior(const OfflinePolicyTable& policy, std::size_t src_len,
                                    std::size_t tgt_len);

void to_json(nlohmann::json& j, const OfflinePolicyTable& t);
void from_json(const nlohmann::json& j, OfflinePolicyTable& t);

}  // namespace simulst
