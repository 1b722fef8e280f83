#pragma once

// Independent reference computations used only by the tests. None of these
// call into the library code they are checking.

#include <cmath>
#include <cstddef>
#include <random>
#include <vector>

namespace oracle {

using Grid = std::vector<std::vector<double>>;

inline Grid random_grid(std::size_t rows, std::size_t cols, std::mt19937_64& rng,
                        double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  Grid g(rows, std::vector<double>(cols));
  for (auto& row : g)
    for (auto& v : row) v = d(rng);
  return g;
}

// Textbook triple loop, j-inner with explicit accumulator.
inline Grid matmul(const Grid& a, const Grid& b) {
  const std::size_t n = a.size(), k = b.size(), m = b.empty() ? 0 : b[0].size();
  Grid out(n, std::vector<double>(m, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      double acc = 0.0;
      for (std::size_t t = 0; t < k; ++t) acc += a[i][t] * b[t][j];
      out[i][j] = acc;
    }
  return out;
}

inline std::vector<double> softmax_direct(const std::vector<double>& x) {
  double total = 0.0;
  for (double v : x) total += std::exp(v);
  std::vector<double> out;
  for (double v : x) out.push_back(std::exp(v) / total);
  return out;
}

inline double sigmoid_direct(double v) { return 1.0 / (1.0 + std::exp(-v)); }

inline std::vector<double> column_means(const Grid& rows) {
  std::vector<double> out(rows[0].size(), 0.0);
  for (const auto& r : rows)
    for (std::size_t c = 0; c < r.size(); ++c) out[c] += r[c];
  for (auto& v : out) v /= static_cast<double>(rows.size());
  return out;
}

// Definition-level per-class F1: count TP/FP/FN by scanning the pairs.
struct ClassCounts {
  long tp = 0, fp = 0, fn = 0, support = 0;
};

inline std::vector<ClassCounts> tally(const std::vector<std::size_t>& gold,
                                      const std::vector<std::size_t>& pred, std::size_t classes) {
  std::vector<ClassCounts> out(classes);
  for (std::size_t c = 0; c < classes; ++c) {
    for (std::size_t k = 0; k < gold.size(); ++k) {
      const bool g = gold[k] == c;
      const bool p = pred[k] == c;
      if (g) ++out[c].support;
      if (g && p) ++out[c].tp;
      if (!g && p) ++out[c].fp;
      if (g && !p) ++out[c].fn;
    }
  }
  return out;
}

// F1 = 2TP / (2TP + FP + FN), which equals 2PR/(P+R) whenever that is
// defined and is 0 when TP == 0.
inline double f1_from_counts(const ClassCounts& c) {
  const long denom = 2 * c.tp + c.fp + c.fn;
  return denom == 0 ? 0.0 : 2.0 * static_cast<double>(c.tp) / static_cast<double>(denom);
}

inline double weighted_f1(const std::vector<std::size_t>& gold,
                          const std::vector<std::size_t>& pred, std::size_t classes) {
  const auto counts = tally(gold, pred, classes);
  double out = 0.0;
  for (const auto& c : counts)
    out += static_cast<double>(c.support) / static_cast<double>(gold.size()) * f1_from_counts(c);
  return out;
}

// Solves (A^T A + lambda I) w = A^T y by Gaussian elimination with partial
// pivoting; used for least-squares linear probes.
inline std::vector<double> ridge_solve(const Grid& a, const std::vector<double>& y, double lambda) {
  const std::size_t d = a[0].size();
  Grid m(d, std::vector<double>(d + 1, 0.0));
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      double acc = 0.0;
      for (std::size_t r = 0; r < a.size(); ++r) acc += a[r][i] * a[r][j];
      m[i][j] = acc + (i == j ? lambda : 0.0);
    }
    double rhs = 0.0;
    for (std::size_t r = 0; r < a.size(); ++r) rhs += a[r][i] * y[r];
    m[i][d] = rhs;
  }
  for (std::size_t col = 0; col < d; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < d; ++r)
      if (std::abs(m[r][col]) > std::abs(m[piv][col])) piv = r;
    std::swap(m[col], m[piv]);
    for (std::size_t r = 0; r < d; ++r) {
      if (r == col) continue;
      const double f = m[r][col] / m[col][col];
      for (std::size_t c = col; c <= d; ++c) m[r][c] -= f * m[col][c];
    }
  }
  std::vector<double> w(d);
  for (std::size_t i = 0; i < d; ++i) w[i] = m[i][d] / m[i][i];
  return w;
}

}  // namespace oracle
