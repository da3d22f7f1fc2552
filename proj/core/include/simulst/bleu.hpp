#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "simulst/corpus.hpp"

namespace simulst {

/// Clipped n-gram matches and hypothesis n-gram totals for n = 1..4.
struct BleuStats {
  std::array<std::size_t, 4> matches{};
  std::array<std::size_t, 4> totals{};
  std::size_t hyp_len = 0;
  std::size_t ref_len = 0;

  BleuStats& operator+=(const BleuStats& o);
};

BleuStats bleu_stats(std::span<const Token> hypothesis, std::span<const Token> reference);

/// 4-gram BLEU in [0,100] with brevity penalty and add-one smoothing on the
/// n >= 2 precisions.
double bleu_from_stats(const BleuStats& stats);

/// Sentence-level score; empty hypothesis scores 0. Throws MetricError on an
/// empty reference.
double quality_score(std::span<const Token> hypothesis, std::span<const Token> reference);

/// Corpus-level score over aggregated statistics.
double corpus_quality(const std::vector<std::vector<Token>>& hypotheses,
                      const std::vector<std::vector<Token>>& references);

}  // namespace simulst
