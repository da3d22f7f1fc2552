#include <cmath>
#include <string>
#include <vector>

#include "simulst/attnmath.hpp"
#include "simulst/error.hpp"

namespace simulst::oracle {

namespace {

constexpr std::size_t kMaxOracleDim = 8;

struct PathWalker {
  const StepwiseProbMatrix& p;
  std::vector<long double> acc;  // row-major N x M

  void walk(std::size_t i, std::size_t start, long double weight) {
    const std::size_t m = p.source_len();
    if (i == p.target_len()) return;
    long double survive = 1.0L;
    for (std::size_t j = start; j < m; ++j) {
      const long double stop = weight * survive * static_cast<long double>(p(i, j));
      if (stop != 0.0L) {
        acc[i * m + j] += stop;
        walk(i + 1, j, stop);
      }
      survive *= 1.0L - static_cast<long double>(p(i, j));
    }
  }
};

}  // namespace

AlignmentMatrix enumerate_alignment_oracle(const StepwiseProbMatrix& p) {
  if (p.target_len() > kMaxOracleDim || p.source_len() > kMaxOracleDim)
    throw SizeError("enumerate_alignment_oracle supports N, M <= 8; got " +
                    std::to_string(p.target_len()) + "x" + std::to_string(p.source_len()));
  PathWalker w{p, std::vector<long double>(p.target_len() * p.source_len(), 0.0L)};
  w.walk(0, 0, 1.0L);
  AlignmentMatrix out(p.target_len(), p.source_len());
  for (std::size_t i = 0; i < out.rows(); ++i)
    for (std::size_t j = 0; j < out.cols(); ++j)
      out(i, j) = static_cast<double>(w.acc[i * out.cols() + j]);
  return out;
}

AlignmentMatrix milk_naive(const AlignmentMatrix& alpha, const EnergyMatrix& u) {
  const Matrix& e = u.values();
  if (alpha.rows() != e.rows() || alpha.cols() != e.cols())
    throw ShapeError("milk_naive: shape mismatch");
  AlignmentMatrix beta(alpha.rows(), alpha.cols());
  for (std::size_t i = 0; i < alpha.rows(); ++i) {
    for (std::size_t j = 0; j < alpha.cols(); ++j) {
      long double s = 0.0L;
      for (std::size_t k = j; k < alpha.cols(); ++k) {
        long double denom = 0.0L;
        for (std::size_t l = 0; l <= k; ++l) denom += std::exp(static_cast<long double>(e(i, l)));
        s += static_cast<long double>(alpha(i, k)) *
             std::exp(static_cast<long double>(e(i, j))) / denom;
      }
      beta(i, j) = static_cast<double>(s);
    }
  }
  return beta;
}

}  // namespace simulst::oracle
