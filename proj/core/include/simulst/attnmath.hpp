#pragma once

#include <cstddef>
#include <vector>

#include "simulst/matrix.hpp"
#include "simulst/trace.hpp"

namespace simulst {

/// Expected monotonic alignment via the literal recurrence
///   a[i][j] = p[i][j] * ((1 - p[i][j-1]) * a[i][j-1] / p[i][j-1] + a[i-1][j]).
/// Unclamped; loses precision when a[i][j-1] underflows relative to p[i][j-1].
AlignmentMatrix expected_alignment_div(const StepwiseProbMatrix& p);

/// Same quantity via the division-free carry
///   q[i][j] = (1 - p[i][j-1]) * q[i][j-1] + a[i-1][j],  a[i][j] = p[i][j] * q[i][j].
AlignmentMatrix expected_alignment_stable(const StepwiseProbMatrix& p);

/// MILk expected soft attention over the consumed prefix, O(N*M).
/// Throws ShapeError on mismatched shapes.
AlignmentMatrix milk_soft_attention(const AlignmentMatrix& alpha, const EnergyMatrix& u);

/// wait-k: read min(k, M), then alternate WRITE/READ; trailing actions once
/// either side is exhausted.
ActionTrace waitk_schedule(std::size_t k, std::size_t src_len, std::size_t tgt_len);

/// mask[i][j] is true iff (j+1) <= min(k + i, M) with 0-based i.
std::vector<std::vector<bool>> waitk_mask(std::size_t k, std::size_t src_len,
                                          std::size_t tgt_len);

/// Source prefix length available to target i (1-based) under wait-k.
inline std::size_t waitk_width(std::size_t k, std::size_t i, std::size_t src_len) {
  const std::size_t w = k + i - 1;
  return w < src_len ? w : src_len;
}

namespace oracle {

/// Exact expectation over every monotone stopping path; N, M <= 8.
AlignmentMatrix enumerate_alignment_oracle(const StepwiseProbMatrix& p);

/// Direct O(N*M^2) evaluation of the MILk sum.
AlignmentMatrix milk_naive(const AlignmentMatrix& alpha, const EnergyMatrix& u);

}  // namespace oracle

/// Make the enumeration oracle reachable under its operation name too.
using oracle::enumerate_alignment_oracle;

}  // namespace simulst
