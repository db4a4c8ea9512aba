#ifndef DYNRW_TESTS_SUPPORT_HPP
#define DYNRW_TESTS_SUPPORT_HPP

#include <cmath>
#include <cstddef>
#include <vector>

// Small dense helpers for exact reference computations in tests.
namespace testsupport {

using Matrix = std::vector<std::vector<double>>;

inline Matrix zeros(std::size_t n) { return Matrix(n, std::vector<double>(n, 0.0)); }

// Row vector times exp(Q t) by uniformization; Q is a generator matrix.
inline std::vector<double> evolve(const std::vector<double>& v, const Matrix& q, double t) {
  const std::size_t n = q.size();
  double lambda = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    lambda = std::max(lambda, -q[i][i]);
  if (lambda == 0.0 || t == 0.0)
    return v;
  std::vector<double> term = v, out(n, 0.0), next(n);
  const double lt = lambda * t;
  double weight = std::exp(-lt);
  for (int k = 0; k < 100000; ++k) {
    for (std::size_t j = 0; j < n; ++j)
      out[j] += weight * term[j];
    if (k > lt && weight < 1e-18)
      break;
    for (std::size_t j = 0; j < n; ++j) {
      double s = term[j];
      for (std::size_t i = 0; i < n; ++i)
        s += term[i] * q[i][j] / lambda;
      next[j] = s;
    }
    term.swap(next);
    weight *= lt / (k + 1);
  }
  return out;
}

// Pearson statistic over cells with expected count >= 5, the rest pooled.
struct ChiSquare {
  double statistic = 0.0;
  int dof = 0;
};

inline ChiSquare chi_square(const std::vector<double>& probs, const std::vector<long>& counts,
                            long total) {
  ChiSquare out;
  double pooled_e = 0.0, pooled_o = 0.0;
  int cells = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const double e = probs[i] * static_cast<double>(total);
    if (e < 5.0) {
      pooled_e += e;
      pooled_o += static_cast<double>(counts[i]);
      continue;
    }
    out.statistic += (counts[i] - e) * (counts[i] - e) / e;
    ++cells;
  }
  if (pooled_e > 0.0) {
    out.statistic += (pooled_o - pooled_e) * (pooled_o - pooled_e) / pooled_e;
    ++cells;
  }
  out.dof = cells - 1;
  return out;
}

// Upper 0.999 quantile of chi-square via the Wilson-Hilferty approximation.
inline double chi_square_q999(int dof) {
  const double z = 3.0902;
  const double k = dof;
  const double c = 1.0 - 2.0 / (9.0 * k) + z * std::sqrt(2.0 / (9.0 * k));
  return k * c * c * c;
}

}  // namespace testsupport

#endif
