#include "simulst/distill.hpp"

#include <algorithm>
#include <string>

#include "simulst/error.hpp"

namespace simulst {

SyntheticRankOracle::SyntheticRankOracle(const Utterance& utt, std::size_t vocab_size)
    : need_(utt.oracle_alignment), vocab_size_(std::max<std::size_t>(vocab_size, 2)) {}

std::size_t SyntheticRankOracle::rank(std::size_t prefix_len, std::size_t target_index) const {
  if (target_index >= need_.size())
    throw ConfigError("rank oracle: target index " + std::to_string(target_index) +
                      " out of range");
  const std::size_t need = need_[target_index];
  if (prefix_len >= need) return 1;
  return 1 + (need - prefix_len) * vocab_size_;
}

OfflinePolicyTable extract_offline_policy(const OfflineLikelihoodOracle& oracle,
                                          std::span<const std::size_t> probes,
                                          std::size_t rank_threshold, std::size_t tgt_len) {
  if (probes.empty()) throw ConfigError("probe grid must be non-empty");
  if (probes.front() < 1) throw ConfigError("probe lengths must be >= 1");
  for (std::size_t p = 1; p < probes.size(); ++p)
    if (probes[p] <= probes[p - 1]) throw ConfigError("probe grid must be strictly increasing");
  if (rank_threshold < 1) throw ConfigError("rank threshold must be >= 1");

  const std::size_t full = probes.back();
  OfflinePolicyTable table;
  table.rank_threshold = rank_threshold;
  table.prefix_lengths.assign(tgt_len, full);
  for (std::size_t j = 0; j < tgt_len; ++j) {
    for (std::size_t len : probes) {
      std::size_t r = 0;
      try {
        r = oracle.rank(len, j);
      } catch (const std::exception& e) {
        throw Error("offline oracle failed at (L=" + std::to_string(len) +
                    ", j=" + std::to_string(j) + "): " + e.what());
      }
      if (r <= rank_threshold) {
        table.prefix_lengths[j] = len;
        break;
      }
    }
  }
  return table;
}

AuxLoss aux_attention_loss(std::span<const double> row, std::size_t prev, std::size_t cur) {
  if (cur < prev || cur > row.size())
    throw ConfigError("segment (" + std::to_string(prev) + ", " + std::to_string(cur) +
                      "] outside the source");
  AuxLoss out;
  if (cur == prev) {
    out.degenerate = true;
    return out;
  }
  double mass = 0.0;
  for (std::size_t k = prev; k < cur; ++k) mass += row[k];
  out.value = -mass;
  return out;
}

PolicyProbTable offline_label_prior(const OfflinePolicyTable& policy, std::size_t src_len,
                                    std::size_t tgt_len) {
  if (policy.prefix_lengths.size() != tgt_len)
    throw ShapeError("offline policy covers " + std::to_string(policy.prefix_lengths.size()) +
                     " targets, expected " + std::to_string(tgt_len));
  Matrix omega(tgt_len, src_len);
  const double norm = 1.0 + kLabelSmoothing * static_cast<double>(src_len);
  for (std::size_t i = 0; i < tgt_len; ++i) {
    const std::size_t label = policy.prefix_lengths[i];
    if (label < 1 || label > src_len)
      throw ConfigError("offline label L_" + std::to_string(i + 1) + " out of range");
    double cum = 0.0;
    for (std::size_t j = 0; j < src_len; ++j) {
      cum += (kLabelSmoothing + (j + 1 == label ? 1.0 : 0.0)) / norm;
      omega(i, j) = std::clamp(cum, kProbClamp, 1.0 - kProbClamp);
    }
  }
  return PolicyProbTable(std::move(omega), TableRole::Prior);
}

void to_json(nlohmann::json& j, const OfflinePolicyTable& t) {
  j = nlohmann::json{{"r", t.rank_threshold}, {"L", t.prefix_lengths}};
}

void from_json(const nlohmann::json& j, OfflinePolicyTable& t) {
  t.rank_threshold = j.at("r").get<std::size_t>();
  t.prefix_lengths = j.at("L").get<std::vector<std::size_t>>();
}

}  // namespace simulst
