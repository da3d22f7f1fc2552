#pragma once

// Reference implementations used only by the tests. They follow the
// definitions directly and share no code with the library.

#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <random>
#include <vector>

namespace oracles {

using Grid = std::vector<std::vector<double>>;

/// Expected stopping position of the hard monotonic head, by recursion over
/// every stop sequence. p[i][j] is the stop probability, last column 1.
inline Grid alignment_by_paths(const Grid& p) {
  const std::size_t n = p.size(), m = p[0].size();
  std::vector<std::vector<long double>> acc(n, std::vector<long double>(m, 0.0L));
  std::function<void(std::size_t, std::size_t, long double)> walk = [&](std::size_t i,
                                                                         std::size_t start,
                                                                         long double mass) {
    if (i == n) return;
    long double stay = 1.0L;  // probability the head passed start..j-1
    for (std::size_t j = start; j < m; ++j) {
      const long double stop = stay * p[i][j];
      if (stop > 0.0L) {
        acc[i][j] += mass * stop;
        walk(i + 1, j, mass * stop);
      }
      stay *= 1.0L - p[i][j];
    }
  };
  walk(0, 0, 1.0L);
  Grid out(n, std::vector<double>(m));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) out[i][j] = static_cast<double>(acc[i][j]);
  return out;
}

/// beta[i][j] = sum_{k>=j} alpha[i][k] exp(u[i][j]) / sum_{l<=k} exp(u[i][l]).
inline Grid milk_by_definition(const Grid& alpha, const Grid& u) {
  const std::size_t n = alpha.size(), m = alpha[0].size();
  Grid beta(n, std::vector<double>(m, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      long double s = 0.0L;
      for (std::size_t k = j; k < m; ++k) {
        long double den = 0.0L;
        for (std::size_t l = 0; l <= k; ++l) den += std::exp(static_cast<long double>(u[i][l]));
        s += alpha[i][k] * std::exp(static_cast<long double>(u[i][j])) / den;
      }
      beta[i][j] = static_cast<double>(s);
    }
  return beta;
}

/// Sentence BLEU: 4-gram, brevity penalty, add-one smoothing for n >= 2.
inline double bleu(const std::vector<int>& hyp, const std::vector<int>& ref) {
  if (hyp.empty()) return 0.0;
  double log_sum = 0.0;
  for (std::size_t n = 1; n <= 4; ++n) {
    std::map<std::vector<int>, int> h, r;
    for (std::size_t s = 0; s + n <= hyp.size(); ++s) ++h[{hyp.begin() + s, hyp.begin() + s + n}];
    for (std::size_t s = 0; s + n <= ref.size(); ++s) ++r[{ref.begin() + s, ref.begin() + s + n}];
    double match = 0.0, total = 0.0;
    for (const auto& [gram, c] : h) {
      total += c;
      auto it = r.find(gram);
      if (it != r.end()) match += std::min(c, it->second);
    }
    const double prec = n == 1 ? match / total : (match + 1.0) / (total + 1.0);
    if (prec == 0.0) return 0.0;
    log_sum += std::log(prec);
  }
  const double c = static_cast<double>(hyp.size()), rl = static_cast<double>(ref.size());
  const double bp = c < rl ? std::exp(1.0 - rl / c) : 1.0;
  return 100.0 * bp * std::exp(log_sum / 4.0);
}

/// Average lagging for a fixed tau (1-based).
inline double lagging(const std::vector<double>& d, double tx, std::size_t tau) {
  const double rate = tx / static_cast<double>(d.size());
  double s = 0.0;
  for (std::size_t i = 1; i <= tau; ++i) s += d[i - 1] - rate * static_cast<double>(i - 1);
  return s / static_cast<double>(tau);
}

/// Every READ/WRITE string with m R's and n W's that starts with R.
inline std::vector<std::string> all_traces(std::size_t m, std::size_t n) {
  std::vector<std::string> out;
  std::string cur;
  std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t r, std::size_t w) {
    if (r == m && w == n) {
      out.push_back(cur);
      return;
    }
    if (r < m) {
      cur.push_back('R');
      rec(r + 1, w);
      cur.pop_back();
    }
    if (w < n && r > 0) {
      cur.push_back('W');
      rec(r, w + 1);
      cur.pop_back();
    }
  };
  rec(0, 0);
  return out;
}

/// log of the step product for a trace under write-probability table
/// theta[target][read-1], skipping forced steps.
inline double step_log_prob(const std::string& trace, const Grid& theta) {
  const std::size_t n = theta.size(), m = theta[0].size();
  std::size_t r = 0, w = 0;
  double lp = 0.0;
  for (char a : trace) {
    const bool forced = r == 0 || r == m || w == n;
    if (!forced) {
      const double q = std::min(std::max(theta[w][r - 1], 1e-7), 1.0 - 1e-7);
      lp += std::log(a == 'W' ? q : 1.0 - q);
    }
    (a == 'W' ? w : r)++;
  }
  return lp;
}

/// Source positions (1-based) read before each WRITE.
inline std::vector<std::size_t> stops(const std::string& trace) {
  std::vector<std::size_t> out;
  std::size_t r = 0;
  for (char a : trace) {
    if (a == 'R')
      ++r;
    else
      out.push_back(r);
  }
  return out;
}

inline Grid random_gates(std::mt19937_64& rng, std::size_t n, std::size_t m) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Grid p(n, std::vector<double>(m));
  for (auto& row : p)
    for (auto& v : row) v = u(rng) < 0.5 ? std::max(u(rng), 1e-6) : std::exp(-8.0 * u(rng));
  for (auto& row : p) row.back() = 1.0;
  return p;
}

}  // namespace oracles
