#pragma once

// Closed-form constants and limit laws: automorphism orders of finite
// DVR-modules, Cohen-Lenstra masses with certified truncation error, the
// full-column-rank probabilities c_{n,r}, alpha constants, and the joint
// limits the experiments are compared against. A literal brute-force
// automorphism counter anchors the closed-form order.

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "coklab/arith.hpp"

namespace coklab {

using BigInt = boost::multiprecision::cpp_int;
using BigRat = boost::multiprecision::cpp_rational;

struct TooLargeError : std::runtime_error {
  explicit TooLargeError(const std::string& what) : std::runtime_error(what) {}
};

using Partition = std::vector<unsigned>;  // parts descending

inline void validate_partition(const Partition& parts) {
  for (size_t i = 0; i < parts.size(); ++i) {
    if (parts[i] == 0) throw std::invalid_argument("partition parts must be positive");
    if (i > 0 && parts[i] > parts[i - 1])
      throw std::invalid_argument("partition parts must be sorted descending");
  }
}

// Module H = direct sum of R/m^{lambda_i} over a DVR with residue field of
// size q; empty partition is the trivial module.
struct ModuleType {
  u64 q = 2;
  Partition partition;
};

// Real value plus a certified bound on the truncation of infinite products.
struct LimitValue {
  double value = 0.0;
  double truncation_error = 0.0;
};

// |Aut(H)| by the conjugate-partition formula
//   q^{sum (lambda'_i)^2} * prod_i prod_{j=1}^{m_i} (1 - q^{-j})
// rearranged into exact integer form q^{sum (lambda'_i)^2 - sum_i T(m_i)} *
// prod_i prod_{j<=m_i} (q^j - 1), T(m) = m(m+1)/2.
inline BigInt aut_order(u64 q, const Partition& parts) {
  validate_partition(parts);
  if (q < 2) throw std::invalid_argument("residue field size must be >= 2");
  if (parts.empty()) return 1;
  unsigned largest = parts.front();
  u64 exponent = 0;
  for (unsigned i = 1; i <= largest; ++i) {
    u64 conj = u64(std::count_if(parts.begin(), parts.end(), [&](unsigned x) { return x >= i; }));
    exponent += conj * conj;
  }
  BigInt result = 1;
  BigInt bq = q;
  for (unsigned part = 1; part <= largest; ++part) {
    u64 mult = u64(std::count(parts.begin(), parts.end(), part));
    exponent -= mult * (mult + 1) / 2;
    BigInt qj = 1;
    for (u64 j = 1; j <= mult; ++j) {
      qj *= bq;
      result *= qj - 1;
    }
  }
  return result * boost::multiprecision::pow(bq, unsigned(exponent));
}

inline BigInt aut_order(const ModuleType& m) { return aut_order(m.q, m.partition); }

namespace detail {

// Determinant mod p of a small dense matrix, destructive.
inline bool det_nonzero_mod_p(u64* e, unsigned r, u64 p) {
  for (unsigned c = 0; c < r; ++c) {
    unsigned piv = r;
    for (unsigned i = c; i < r; ++i)
      if (e[i * r + c] != 0) {
        piv = i;
        break;
      }
    if (piv == r) return false;
    if (piv != c)
      for (unsigned j = c; j < r; ++j) std::swap(e[c * r + j], e[piv * r + j]);
    u64 inv = powmod_u64(e[c * r + c], p - 2, p);
    for (unsigned i = c + 1; i < r; ++i) {
      u64 f = e[i * r + c];
      if (f == 0) continue;
      u64 fi = f * inv % p;
      for (unsigned j = c; j < r; ++j)
        e[i * r + j] = (e[i * r + j] + (p - fi) * e[c * r + j]) % p;
    }
  }
  return true;
}

}  // namespace detail

// Exhaustive automorphism count for the base ring (d = 1). An endomorphism
// of ⊕ Z/p^{lambda_i} is a matrix (e_ij) with e_ij a multiple of
// p^{max(0, lambda_i - lambda_j)} mod p^{lambda_i}, and it is invertible iff
// its mod-p reduction has nonzero determinant (entries with lambda_i >
// lambda_j reduce to 0). Every endomorphism tuple is visited by an odometer;
// the determinant is only recomputed when a digit that can reach the mod-p
// reduction changes (digits that cannot are ordered fastest), which does not
// change what is counted. Caps: module order <= 2^12, <= 2^29 tuples,
// <= 2^26 determinant evaluations.
inline BigInt aut_order_bruteforce(u64 p, const Partition& parts) {
  validate_partition(parts);
  if (!is_prime_u64(p)) throw std::invalid_argument("p must be prime");
  const unsigned r = unsigned(parts.size());
  if (r == 0) return 1;
  u64 total = std::accumulate(parts.begin(), parts.end(), u64(0));
  if (checked_pow(p, unsigned(total), ~(u128)0 >> 1, "module order") > ((u128)1 << 12))
    throw TooLargeError("module order exceeds 2^12");

  struct Digit {
    unsigned i, j;
    u64 count;    // p^{min(lambda_i, lambda_j)} choices
    bool masked;  // lambda_i > lambda_j: mod-p reduction pinned to 0
  };
  std::vector<Digit> digits;
  u128 tuples = 1, det_evals = 1;
  for (unsigned i = 0; i < r; ++i)
    for (unsigned j = 0; j < r; ++j) {
      Digit d;
      d.i = i;
      d.j = j;
      d.count = (u64)checked_pow(p, std::min(parts[i], parts[j]), (u128)1 << 62, "digit count");
      d.masked = parts[i] > parts[j];
      if (tuples > ((u128)1 << 29) / d.count)
        throw TooLargeError("endomorphism enumeration exceeds 2^29 tuples");
      tuples *= d.count;
      if (!d.masked) {
        if (det_evals > ((u128)1 << 26) / d.count)
          throw TooLargeError("determinant evaluations exceed 2^26");
        det_evals *= d.count;
      }
      digits.push_back(d);
    }
  // masked digits vary fastest so the cached determinant survives their turns
  std::stable_sort(digits.begin(), digits.end(),
                   [](const Digit& a, const Digit& b) { return a.masked > b.masked; });
  size_t masked_count = size_t(std::count_if(digits.begin(), digits.end(),
                                             [](const Digit& d) { return d.masked; }));

  std::vector<u64> c(digits.size(), 0);
  std::vector<u64> red(size_t(r) * r, 0);  // mod-p reduction of the current tuple
  std::vector<u64> scratch(size_t(r) * r);
  auto recompute = [&]() {
    std::copy(red.begin(), red.end(), scratch.begin());
    return detail::det_nonzero_mod_p(scratch.data(), r, p);
  };
  bool invertible = recompute();
  BigInt count = 0;
  u128 visited = 0;
  while (true) {
    if (invertible) ++count;
    ++visited;
    size_t pos = 0;
    while (pos < digits.size()) {
      if (++c[pos] < digits[pos].count) break;
      c[pos] = 0;
      if (!digits[pos].masked) red[size_t(digits[pos].i) * r + digits[pos].j] = 0;
      ++pos;
    }
    if (pos == digits.size()) break;
    if (!digits[pos].masked) {
      const Digit& d = digits[pos];
      red[size_t(d.i) * r + d.j] = c[pos] % p;
    }
    if (pos >= masked_count) invertible = recompute();
  }
  if (visited != tuples) throw std::logic_error("odometer did not cover the tuple space");
  return count;
}

namespace detail {

// Upper bound on -log of the tail prod_{i>N} (1 - q^{-i}):
//   sum_{i>N} -log(1 - q^{-i}) <= sum_{i>N} q^{-i} / (1 - 1/q)
inline double product_tail_bound(double q, unsigned n_terms) {
  double geo = std::pow(q, -double(n_terms + 1)) / (1.0 - 1.0 / q);
  return geo / (1.0 - 1.0 / q);
}

// prod_{i=1}^{N}(1 - q^{-i}) with N chosen so the tail bound is below tol.
inline LimitValue truncated_euler_product(double q, double tol) {
  if (!(tol > 0)) throw std::invalid_argument("tolerance must be positive");
  // below ~1e-14 double rounding dominates and no honest certificate exists
  if (tol < 1e-14) throw std::invalid_argument("tolerance below double precision");
  unsigned n_terms = 1;
  while (product_tail_bound(q, n_terms) > tol / 2 && n_terms < 4096) ++n_terms;
  long double prod = 1.0L;
  long double qi = 1.0L;
  for (unsigned i = 1; i <= n_terms; ++i) {
    qi /= q;
    prod *= (1.0L - qi);
  }
  LimitValue v;
  v.value = double(prod);
  // truncating an increasing-to-limit product of factors < 1 overestimates by
  // at most the tail factor; add a small float-rounding guard (the long double
  // accumulation keeps rounding well under this)
  v.truncation_error = product_tail_bound(q, n_terms) + 1e-15;
  return v;
}

}  // namespace detail

// (1 / |Aut(H)|) * prod_{i>=1} (1 - q^{-i}) with certified truncation error.
inline LimitValue cohen_lenstra_mass(const ModuleType& m, double tol = 1e-12) {
  LimitValue prod = detail::truncated_euler_product(double(m.q), tol);
  double aut = double(aut_order(m));
  LimitValue v;
  v.value = prod.value / aut;
  v.truncation_error = prod.truncation_error / aut + std::abs(v.value) * 1e-14;
  return v;
}

// Product over independent coordinates; errors accumulate additively since
// every factor lies in [0, 1].
inline LimitValue joint_limit(const std::vector<ModuleType>& modules, double tol = 1e-12) {
  if (modules.empty()) throw std::invalid_argument("joint_limit: empty module list");
  double per = tol / double(2 * modules.size());
  LimitValue v{1.0, 0.0};
  for (const ModuleType& m : modules) {
    LimitValue f = cohen_lenstra_mass(m, per);
    v.value *= f.value;
    v.truncation_error += f.truncation_error;
  }
  v.truncation_error += std::abs(v.value) * 1e-14;
  return v;
}

// c_{n,r} = prod_{j=0}^{r-1} (1 - p^{-(n-j)}), exact; r = 0 gives 1.
inline BigRat full_rank_prob(unsigned n, unsigned r, u64 p) {
  if (r > n) throw std::invalid_argument("full_rank_prob requires r <= n");
  BigRat prob = 1;
  for (unsigned j = 0; j < r; ++j) {
    BigInt pw = boost::multiprecision::pow(BigInt(p), n - j);
    prob *= BigRat(pw - 1, pw);
  }
  return prob;
}

// alpha_{p,k} = prod_{i=1}^{k} (1 - p^{-i}), exact; alpha_{p,0} = 1.
inline BigRat alpha(u64 p, unsigned k) {
  BigRat prob = 1;
  BigInt pw = 1;
  for (unsigned i = 1; i <= k; ++i) {
    pw *= p;
    prob *= BigRat(pw - 1, pw);
  }
  return prob;
}

inline LimitValue alpha_inf(u64 p, double tol = 1e-12) {
  return detail::truncated_euler_product(double(p), tol);
}

// alpha_{p,inf} * alpha_{p,corank}: the limiting probability that a Haar
// matrix and its shift by diag(I_corank, 0) both have trivial cokernel.
inline LimitValue trivial_pair_limit(u64 p, unsigned corank, double tol = 1e-12) {
  LimitValue inf = alpha_inf(p, tol / 2);
  double fin = double(alpha(p, corank));
  LimitValue v;
  v.value = inf.value * fin;
  v.truncation_error = inf.truncation_error * fin + std::abs(v.value) * 1e-14;
  return v;
}

// All partitions with total <= max_total, parts <= max_part, at most
// max_parts parts, in deterministic order (descending lexicographic seeds).
inline std::vector<Partition> partitions_up_to(unsigned max_total, unsigned max_part,
                                               unsigned max_parts) {
  std::vector<Partition> out;
  Partition cur;
  auto rec = [&](auto&& self, unsigned remaining, unsigned cap) -> void {
    out.push_back(cur);
    if (cur.size() >= max_parts) return;
    for (unsigned part = std::min(cap, remaining); part >= 1; --part) {
      cur.push_back(part);
      self(self, remaining - part, part);
      cur.pop_back();
    }
  };
  rec(rec, max_total, std::min(max_part, max_total));
  return out;
}

inline double to_double(const BigRat& r) { return double(r); }

}  // namespace coklab
