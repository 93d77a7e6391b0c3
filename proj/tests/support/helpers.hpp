#pragma once

// Shared test utilities: statistical tolerances, a chi-square helper, small
// exhaustive enumerators over F_q used as oracles, and the exact count of
// invertible matrices without eigenvalue one (the finite-n ground truth for
// the multiplicative-side marginal).

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "coklab/arith.hpp"
#include "coklab/limits.hpp"

namespace coklab_test {

using coklab::BigInt;
using coklab::BigRat;
using coklab::u64;

inline double freq_se(double p, double n) { return std::sqrt(p * (1.0 - p) / n); }

inline bool within_sigma(double observed, double expected, double n, double nsigma) {
  double se = freq_se(expected, n);
  return std::abs(observed - expected) <= nsigma * se;
}

// Pearson statistic against the mean + nsigma * sd of the chi-square
// distribution with (cells - 1) degrees of freedom.
inline bool chi_square_ok(const std::vector<u64>& observed, const std::vector<double>& expected,
                          double nsigma) {
  if (observed.size() != expected.size() || observed.empty())
    throw std::invalid_argument("chi_square_ok: shape mismatch");
  double stat = 0;
  for (size_t i = 0; i < observed.size(); ++i) {
    if (expected[i] <= 0) throw std::invalid_argument("chi_square_ok: nonpositive expectation");
    double d = double(observed[i]) - expected[i];
    stat += d * d / expected[i];
  }
  double df = double(observed.size() - 1);
  return stat <= df + nsigma * std::sqrt(2.0 * df);
}

inline BigInt gl_order(unsigned n, u64 q) {
  BigInt qn = boost::multiprecision::pow(BigInt(q), n);
  BigInt order = 1, qi = 1;
  for (unsigned i = 0; i < n; ++i) {
    order *= qn - qi;
    qi *= q;
  }
  return order;
}

inline BigInt gaussian_binomial(unsigned n, unsigned k, u64 q) {
  if (k > n) return 0;
  // prod_{i=1}^{k} (q^{n-k+i} - 1) / (q^i - 1), exact
  BigInt num = 1, den = 1;
  BigInt qq(q);
  for (unsigned i = 1; i <= k; ++i) {
    num *= boost::multiprecision::pow(qq, n - k + i) - 1;
    den *= boost::multiprecision::pow(qq, i) - 1;
  }
  return num / den;
}

// #{g in GL_n(F_q) : g - I invertible} by inclusion-exclusion over the
// pointwise-fixed subspace: sum_k (-1)^k q^{k(k-1)/2} [n k]_q q^{k(n-k)}
// |GL_{n-k}(F_q)|. Verified below against direct enumeration at small sizes.
inline BigInt gl_no_fixed_vector_count(unsigned n, u64 q) {
  BigInt total = 0;
  BigInt qq(q);
  for (unsigned k = 0; k <= n; ++k) {
    BigInt term = gaussian_binomial(n, k, q) * gl_order(n - k, q);
    term *= boost::multiprecision::pow(qq, k * (k - 1) / 2 + k * (n - k));
    if (k % 2 == 0)
      total += term;
    else
      total -= term;
  }
  return total;
}

inline BigRat gl_no_fixed_vector_prob(unsigned n, u64 q) {
  return BigRat(gl_no_fixed_vector_count(n, q), gl_order(n, q));
}

// Direct odometer over all n x n matrices mod q; counts those where `keep`
// holds. Oracle-grade: no linear algebra shortcuts.
template <class Keep>
inline u64 count_matrices(unsigned n, u64 q, Keep&& keep) {
  std::vector<u64> e(size_t(n) * n, 0);
  u64 count = 0;
  while (true) {
    if (keep(e)) ++count;
    size_t pos = 0;
    while (pos < e.size() && ++e[pos] == q) e[pos++] = 0;
    if (pos == e.size()) break;
  }
  return count;
}

// Determinant over F_q (q prime) by expansion-free Gaussian elimination; kept
// separate from library code so tests do not lean on what they verify.
inline u64 det_mod_q(std::vector<u64> e, unsigned n, u64 q) {
  u64 det = 1;
  for (unsigned c = 0; c < n; ++c) {
    unsigned piv = n;
    for (unsigned i = c; i < n; ++i)
      if (e[size_t(i) * n + c] != 0) {
        piv = i;
        break;
      }
    if (piv == n) return 0;
    if (piv != c) {
      for (unsigned j = 0; j < n; ++j) std::swap(e[size_t(c) * n + j], e[size_t(piv) * n + j]);
      det = (q - det) % q;
    }
    u64 pivot = e[size_t(c) * n + c];
    det = (coklab::u128)det * pivot % q;
    u64 inv = coklab::powmod_u64(pivot, q - 2, q);
    for (unsigned i = c + 1; i < n; ++i) {
      u64 f = (coklab::u128)e[size_t(i) * n + c] * inv % q;
      if (f == 0) continue;
      for (unsigned j = c; j < n; ++j) {
        u64 sub = (coklab::u128)f * e[size_t(c) * n + j] % q;
        u64& tgt = e[size_t(i) * n + j];
        tgt = (tgt + q - sub) % q;
      }
    }
  }
  return det;
}

}  // namespace coklab_test
