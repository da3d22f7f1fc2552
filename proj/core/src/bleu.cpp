#include "simulst/bleu.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "simulst/error.hpp"

namespace simulst {

namespace {

using Ngram = std::vector<Token>;

std::map<Ngram, std::size_t> count_ngrams(std::span<const Token> seq, std::size_t n) {
  std::map<Ngram, std::size_t> counts;
  if (seq.size() < n) return counts;
  for (std::size_t s = 0; s + n <= seq.size(); ++s)
    ++counts[Ngram(seq.begin() + static_cast<std::ptrdiff_t>(s),
                   seq.begin() + static_cast<std::ptrdiff_t>(s + n))];
  return counts;
}

}  // namespace

BleuStats& BleuStats::operator+=(const BleuStats& o) {
  for (std::size_t n = 0; n < 4; ++n) {
    matches[n] += o.matches[n];
    totals[n] += o.totals[n];
  }
  hyp_len += o.hyp_len;
  ref_len += o.ref_len;
  return *this;
}

BleuStats bleu_stats(std::span<const Token> hyp, std::span<const Token> ref) {
  BleuStats st;
  st.hyp_len = hyp.size();
  st.ref_len = ref.size();
  for (std::size_t n = 1; n <= 4; ++n) {
    const auto h = count_ngrams(hyp, n);
    const auto r = count_ngrams(ref, n);
    std::size_t total = 0, match = 0;
    for (const auto& [gram, c] : h) {
      total += c;
      if (auto it = r.find(gram); it != r.end()) match += std::min(c, it->second);
    }
    st.totals[n - 1] = total;
    st.matches[n - 1] = match;
  }
  return st;
}

double bleu_from_stats(const BleuStats& st) {
  if (st.hyp_len == 0 || st.matches[0] == 0) return 0.0;
  double log_p = std::log(static_cast<double>(st.matches[0]) / static_cast<double>(st.totals[0]));
  for (std::size_t n = 1; n < 4; ++n)
    log_p += std::log((static_cast<double>(st.matches[n]) + 1.0) /
                      (static_cast<double>(st.totals[n]) + 1.0));
  const double bp =
      st.hyp_len >= st.ref_len
          ? 1.0
          : std::exp(1.0 - static_cast<double>(st.ref_len) / static_cast<double>(st.hyp_len));
  return 100.0 * bp * std::exp(log_p / 4.0);
}

double quality_score(std::span<const Token> hyp, std::span<const Token> ref) {
  if (ref.empty()) throw MetricError("quality_score: empty reference");
  return bleu_from_stats(bleu_stats(hyp, ref));
}

double corpus_quality(const std::vector<std::vector<Token>>& hyps,
                      const std::vector<std::vector<Token>>& refs) {
  if (hyps.size() != refs.size())
    throw MetricError("corpus_quality: hypothesis/reference count mismatch");
  BleuStats total;
  for (std::size_t s = 0; s < hyps.size(); ++s) {
    if (refs[s].empty()) throw MetricError("corpus_quality: empty reference");
    total += bleu_stats(hyps[s], refs[s]);
  }
  return bleu_from_stats(total);
}

}  // namespace simulst
