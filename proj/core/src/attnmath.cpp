#include "simulst/attnmath.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "simulst/error.hpp"

namespace simulst {

AlignmentMatrix expected_alignment_div(const StepwiseProbMatrix& p) {
  const std::size_t n = p.target_len(), m = p.source_len();
  AlignmentMatrix a(n, m);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      double carry = i == 0 ? (j == 0 ? 1.0 : 0.0) : a(i - 1, j);
      if (j > 0) carry += (1.0 - p(i, j - 1)) * a(i, j - 1) / p(i, j - 1);
      a(i, j) = p(i, j) * carry;
    }
  }
  return a;
}

AlignmentMatrix expected_alignment_stable(const StepwiseProbMatrix& p) {
  const std::size_t n = p.target_len(), m = p.source_len();
  AlignmentMatrix a(n, m);
  for (std::size_t i = 0; i < n; ++i) {
    double q = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      const double above = i == 0 ? (j == 0 ? 1.0 : 0.0) : a(i - 1, j);
      // q is the mass still undecided at j; rounding can push it past 1
      q = std::min(1.0, (j == 0 ? 0.0 : (1.0 - p(i, j - 1)) * q) + above);
      a(i, j) = p(i, j) * q;
    }
  }
  return a;
}

AlignmentMatrix milk_soft_attention(const AlignmentMatrix& alpha, const EnergyMatrix& u) {
  const Matrix& e = u.values();
  if (alpha.rows() != e.rows() || alpha.cols() != e.cols())
    throw ShapeError("milk_soft_attention: alpha is " + std::to_string(alpha.rows()) + "x" +
                     std::to_string(alpha.cols()) + " but energies are " +
                     std::to_string(e.rows()) + "x" + std::to_string(e.cols()));
  const std::size_t n = alpha.rows(), m = alpha.cols();
  AlignmentMatrix beta(n, m);
  std::vector<double> lse(m);
  for (std::size_t i = 0; i < n; ++i) {
    // lse[k] = log sum_{l<=k} exp(u[i][l])
    lse[0] = e(i, 0);
    for (std::size_t k = 1; k < m; ++k) {
      const double hi = std::max(lse[k - 1], e(i, k));
      const double lo = std::min(lse[k - 1], e(i, k));
      lse[k] = hi + std::log1p(std::exp(lo - hi));
    }
    // tail = sum_{k>=j} alpha[i][k] * exp(lse[j] - lse[k]); every factor <= 1.
    double tail = 0.0;
    for (std::size_t jj = m; jj-- > 0;) {
      tail = alpha(i, jj) + (jj + 1 < m ? std::exp(lse[jj] - lse[jj + 1]) * tail : 0.0);
      beta(i, jj) = std::exp(e(i, jj) - lse[jj]) * tail;
    }
  }
  return beta;
}

ActionTrace waitk_schedule(std::size_t k, std::size_t src_len, std::size_t tgt_len) {
  if (k == 0) throw ConfigError("wait-k requires k >= 1");
  std::vector<Action> acts;
  acts.reserve(src_len + tgt_len);
  std::size_t read = 0, written = 0;
  while (read < src_len || written < tgt_len) {
    const bool need_more = read < waitk_width(k, written + 1, src_len);
    if (read < src_len && (need_more || written == tgt_len)) {
      acts.push_back(Action::Read);
      ++read;
    } else {
      acts.push_back(Action::Write);
      ++written;
    }
  }
  return ActionTrace(std::move(acts));
}

std::vector<std::vector<bool>> waitk_mask(std::size_t k, std::size_t src_len,
                                          std::size_t tgt_len) {
  if (k == 0) throw ConfigError("wait-k requires k >= 1");
  std::vector<std::vector<bool>> mask(tgt_len, std::vector<bool>(src_len, false));
  for (std::size_t i = 0; i < tgt_len; ++i) {
    const std::size_t w = waitk_width(k, i + 1, src_len);
    for (std::size_t j = 0; j < w; ++j) mask[i][j] = true;
  }
  return mask;
}

}  // namespace simulst
