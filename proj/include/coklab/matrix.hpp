#pragma once

// Matrices over the local rings: Smith normal form by minimal-valuation
// pivoting, cokernel classes, polynomial evaluation, the characteristic
// matrix A - tI over an extension, and mod-p rank.

#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "coklab/ring.hpp"

namespace coklab {

struct DegreeMismatchError : std::invalid_argument {
  explicit DegreeMismatchError(const std::string& what) : std::invalid_argument(what) {}
};

template <class S>
class LocalMatrix {
 public:
  LocalMatrix(RingRef ring, unsigned rows, unsigned cols)
      : ring_(std::move(ring)), rows_(rows), cols_(cols), e_(size_t(rows) * cols) {}

  const RingParams& ring() const { return *ring_; }
  const RingRef& ring_ref() const { return ring_; }
  unsigned rows() const { return rows_; }
  unsigned cols() const { return cols_; }

  S& at(unsigned i, unsigned j) { return e_[size_t(i) * cols_ + j]; }
  const S& at(unsigned i, unsigned j) const { return e_[size_t(i) * cols_ + j]; }

  void swap_rows(unsigned a, unsigned b) {
    if (a == b) return;
    for (unsigned j = 0; j < cols_; ++j) std::swap(at(a, j), at(b, j));
  }
  void swap_cols(unsigned a, unsigned b) {
    if (a == b) return;
    for (unsigned i = 0; i < rows_; ++i) std::swap(at(i, a), at(i, b));
  }

  friend bool operator==(const LocalMatrix& a, const LocalMatrix& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.ring_->same_ring(*b.ring_) &&
           a.e_ == b.e_;
  }

 private:
  RingRef ring_;
  unsigned rows_, cols_;
  std::vector<S> e_;
};

using ZpMatrix = LocalMatrix<Zp>;
using ExtMatrix = LocalMatrix<Ext>;

inline ZpMatrix identity_matrix(const RingRef& ring, unsigned n) {
  ZpMatrix m(ring, n, n);
  for (unsigned i = 0; i < n; ++i) m.at(i, i) = ring->one();
  return m;
}

namespace detail {
inline void require_same_ring(const RingParams& a, const RingParams& b, const char* op) {
  if (!a.same_ring(b)) throw DegreeMismatchError(std::string(op) + ": ring parameters differ");
}
}  // namespace detail

template <class S>
LocalMatrix<S> mat_mul(const LocalMatrix<S>& a, const LocalMatrix<S>& b) {
  detail::require_same_ring(a.ring(), b.ring(), "mat_mul");
  if (a.cols() != b.rows()) throw std::invalid_argument("mat_mul: shape mismatch");
  const RingParams& R = a.ring();
  LocalMatrix<S> r(a.ring_ref(), a.rows(), b.cols());
  for (unsigned i = 0; i < a.rows(); ++i)
    for (unsigned l = 0; l < a.cols(); ++l) {
      const S& ail = a.at(i, l);
      if (R.is_zero(ail)) continue;
      for (unsigned j = 0; j < b.cols(); ++j)
        r.at(i, j) = R.add(r.at(i, j), R.mul(ail, b.at(l, j)));
    }
  return r;
}

template <class S>
LocalMatrix<S> mat_add(const LocalMatrix<S>& a, const LocalMatrix<S>& b) {
  detail::require_same_ring(a.ring(), b.ring(), "mat_add");
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument("mat_add: shape mismatch");
  const RingParams& R = a.ring();
  LocalMatrix<S> r(a.ring_ref(), a.rows(), a.cols());
  for (unsigned i = 0; i < a.rows(); ++i)
    for (unsigned j = 0; j < a.cols(); ++j) r.at(i, j) = R.add(a.at(i, j), b.at(i, j));
  return r;
}

// Diagonal valuations v_1 <= v_2 <= ..., length min(rows, cols); the value k
// stands for ">= k" (saturated). Pivot choice: minimal valuation, ties broken
// by smallest row then smallest column (row-major scan keeps the first hit).
// Elimination divides only by units and by exact powers of p, so every entry
// of every minor stays exact mod p^k; once no entry is nonzero mod p^k the
// remaining diagonal is reported saturated and elimination stops.
template <class S>
std::vector<unsigned> smith_normal_form(LocalMatrix<S> m) {
  const RingParams& R = m.ring();
  const unsigned k = R.k();
  const unsigned steps = std::min(m.rows(), m.cols());
  std::vector<unsigned> vals;
  vals.reserve(steps);
  for (unsigned r = 0; r < steps; ++r) {
    unsigned best_v = k, bi = r, bj = r;
    for (unsigned i = r; i < m.rows() && best_v > 0; ++i)
      for (unsigned j = r; j < m.cols(); ++j) {
        unsigned v = R.valuation(m.at(i, j));
        if (v < best_v) {
          best_v = v;
          bi = i;
          bj = j;
          if (v == 0) break;
        }
      }
    if (best_v >= k) break;
    m.swap_rows(r, bi);
    m.swap_cols(r, bj);
    S unit = R.shift_down(m.at(r, r), best_v);
    S uinv = R.invert_unit(unit);
    for (unsigned j = r; j < m.cols(); ++j) m.at(r, j) = R.mul(m.at(r, j), uinv);
    for (unsigned i = r + 1; i < m.rows(); ++i) {
      if (R.is_zero(m.at(i, r))) continue;
      S f = R.shift_down(m.at(i, r), best_v);
      for (unsigned j = r; j < m.cols(); ++j)
        m.at(i, j) = R.sub(m.at(i, j), R.mul(f, m.at(r, j)));
    }
    // column elimination: rows below the pivot are already zero in column r,
    // so only the pivot row changes and lands exactly on zero
    for (unsigned j = r + 1; j < m.cols(); ++j) m.at(r, j) = S{};
    vals.push_back(best_v);
  }
  while (vals.size() < steps) vals.push_back(k);
  return vals;
}

// Variant recording the elementary operations: returns (vals, U, V) with
// U * A * V equal to the diagonal of p^{vals} (saturated slots exactly zero
// mod p^k). Not used in the sampling hot path.
template <class S>
std::vector<unsigned> smith_normal_form_transform(LocalMatrix<S> m, LocalMatrix<S>& U,
                                                 LocalMatrix<S>& V) {
  const RingParams& R = m.ring();
  const unsigned k = R.k();
  const unsigned steps = std::min(m.rows(), m.cols());
  auto eye = [&](unsigned n) {
    LocalMatrix<S> id(m.ring_ref(), n, n);
    for (unsigned i = 0; i < n; ++i) {
      S one{};
      if constexpr (std::is_same_v<S, Zp>)
        one = R.one();
      else
        one = R.ext_one();
      id.at(i, i) = one;
    }
    return id;
  };
  U = eye(m.rows());
  V = eye(m.cols());
  std::vector<unsigned> vals;
  for (unsigned r = 0; r < steps; ++r) {
    unsigned best_v = k, bi = r, bj = r;
    for (unsigned i = r; i < m.rows() && best_v > 0; ++i)
      for (unsigned j = r; j < m.cols(); ++j) {
        unsigned v = R.valuation(m.at(i, j));
        if (v < best_v) {
          best_v = v;
          bi = i;
          bj = j;
          if (v == 0) break;
        }
      }
    if (best_v >= k) break;
    m.swap_rows(r, bi);
    U.swap_rows(r, bi);
    m.swap_cols(r, bj);
    V.swap_cols(r, bj);
    S uinv = R.invert_unit(R.shift_down(m.at(r, r), best_v));
    for (unsigned j = r; j < m.cols(); ++j) m.at(r, j) = R.mul(m.at(r, j), uinv);
    for (unsigned j = 0; j < U.cols(); ++j) U.at(r, j) = R.mul(U.at(r, j), uinv);
    for (unsigned i = r + 1; i < m.rows(); ++i) {
      if (R.is_zero(m.at(i, r))) continue;
      S f = R.shift_down(m.at(i, r), best_v);
      for (unsigned j = r; j < m.cols(); ++j)
        m.at(i, j) = R.sub(m.at(i, j), R.mul(f, m.at(r, j)));
      for (unsigned j = 0; j < U.cols(); ++j)
        U.at(i, j) = R.sub(U.at(i, j), R.mul(f, U.at(r, j)));
    }
    for (unsigned j = r + 1; j < m.cols(); ++j) {
      if (R.is_zero(m.at(r, j))) continue;
      S g = R.shift_down(m.at(r, j), best_v);
      for (unsigned i = 0; i < V.rows(); ++i)
        V.at(i, j) = R.sub(V.at(i, j), R.mul(g, V.at(i, r)));
      m.at(r, j) = S{};
    }
    vals.push_back(best_v);
  }
  while (vals.size() < steps) vals.push_back(k);
  return vals;
}

// Multiset of p-valuations of the nontrivial cyclic factors, descending;
// factors of exponent >= p^k are only counted, not resolved.
struct CokernelClass {
  std::vector<unsigned> parts;
  unsigned saturated_count = 0;
  unsigned residue_degree = 1;

  unsigned p_rank() const { return unsigned(parts.size()) + saturated_count; }
  unsigned max_part() const { return parts.empty() ? 0 : parts.front(); }
  bool trivial() const { return parts.empty() && saturated_count == 0; }

  friend bool operator==(const CokernelClass&, const CokernelClass&) = default;
};

template <class S>
CokernelClass cokernel_class(const LocalMatrix<S>& m) {
  if (m.rows() != m.cols()) throw std::invalid_argument("cokernel_class: matrix must be square");
  const unsigned k = m.ring().k();
  std::vector<unsigned> vals = smith_normal_form(m);
  CokernelClass c;
  c.residue_degree = m.ring().degree();
  for (auto it = vals.rbegin(); it != vals.rend(); ++it) {
    if (*it >= k)
      ++c.saturated_count;
    else if (*it > 0)
      c.parts.push_back(*it);
  }
  return c;
}

// Monic integer polynomial, coefficients ascending.
struct PolynomialSpec {
  std::vector<i64> coeffs;

  unsigned degree() const { return coeffs.size() < 2 ? 0 : unsigned(coeffs.size() - 1); }

  void validate() const {
    if (coeffs.size() < 2) throw std::invalid_argument("polynomial must have degree >= 1");
    if (coeffs.back() != 1) throw std::invalid_argument("polynomial must be monic");
  }

  // coefficients reduced mod p, trailing zeros trimmed; distinguishes
  // polynomials with equal reductions
  std::vector<u64> reduction_mod_p(u64 p) const {
    std::vector<u64> r(coeffs.size());
    for (size_t i = 0; i < coeffs.size(); ++i) {
      i64 c = coeffs[i] % i64(p);
      if (c < 0) c += i64(p);
      r[i] = u64(c);
    }
    while (!r.empty() && r.back() == 0) r.pop_back();
    return r;
  }

  friend bool operator==(const PolynomialSpec&, const PolynomialSpec&) = default;
};

// Horner evaluation of P(A), exact mod p^k.
inline ZpMatrix poly_eval_matrix(const ZpMatrix& a, const PolynomialSpec& poly) {
  poly.validate();
  if (a.rows() != a.cols()) throw std::invalid_argument("poly_eval_matrix: matrix must be square");
  const RingParams& R = a.ring();
  const unsigned n = a.rows();
  ZpMatrix acc(a.ring_ref(), n, n);
  for (unsigned i = 0; i < n; ++i) acc.at(i, i) = R.from_int(poly.coeffs.back());
  for (size_t idx = poly.coeffs.size() - 1; idx-- > 0;) {
    acc = mat_mul(acc, a);
    Zp c = R.from_int(poly.coeffs[idx]);
    for (unsigned i = 0; i < n; ++i) acc.at(i, i) = R.add(acc.at(i, i), c);
  }
  return acc;
}

// A - tI over the extension ring; entries of A embed as constants.
inline ExtMatrix char_matrix(const ZpMatrix& a, const RingRef& ext) {
  if (a.ring().p() != ext->p() || a.ring().k() != ext->k())
    throw DegreeMismatchError("char_matrix: base and extension rings disagree in p or k");
  if (a.rows() != a.cols()) throw std::invalid_argument("char_matrix: matrix must be square");
  const unsigned n = a.rows();
  ExtMatrix m(ext, n, n);
  for (unsigned i = 0; i < n; ++i)
    for (unsigned j = 0; j < n; ++j) {
      Ext e = ext->ext_from_base(Zp{a.at(i, j).v});
      if (i == j) e = ext->sub(e, ext->t());
      m.at(i, j) = e;
    }
  return m;
}

// Rank over F_p of a dense matrix given mod p, by Gaussian elimination.
inline unsigned fp_rank(std::vector<u64> e, unsigned rows, unsigned cols, u64 p) {
  unsigned rank = 0;
  for (unsigned c = 0; c < cols && rank < rows; ++c) {
    unsigned piv = rows;
    for (unsigned i = rank; i < rows; ++i)
      if (e[size_t(i) * cols + c] != 0) {
        piv = i;
        break;
      }
    if (piv == rows) continue;
    for (unsigned j = 0; j < cols; ++j)
      std::swap(e[size_t(rank) * cols + j], e[size_t(piv) * cols + j]);
    u64 inv = powmod_u64(e[size_t(rank) * cols + c], p - 2, p);
    for (unsigned j = c; j < cols; ++j)
      e[size_t(rank) * cols + j] = (u128)e[size_t(rank) * cols + j] * inv % p;
    for (unsigned i = 0; i < rows; ++i) {
      if (i == rank) continue;
      u64 f = e[size_t(i) * cols + c];
      if (f == 0) continue;
      for (unsigned j = c; j < cols; ++j) {
        u64 sub = (u128)f * e[size_t(rank) * cols + j] % p;
        u64& tgt = e[size_t(i) * cols + j];
        tgt = (tgt + p - sub) % p;
      }
    }
    ++rank;
  }
  return rank;
}

// r_p(cok(M)) = n - rank of the mod-p reduction.
inline unsigned p_rank(const ZpMatrix& m) {
  if (m.rows() != m.cols()) throw std::invalid_argument("p_rank: matrix must be square");
  const u64 p = m.ring().p();
  std::vector<u64> e(size_t(m.rows()) * m.cols());
  for (unsigned i = 0; i < m.rows(); ++i)
    for (unsigned j = 0; j < m.cols(); ++j) e[size_t(i) * m.cols() + j] = (u64)(m.at(i, j).v % p);
  return m.rows() - fp_rank(std::move(e), m.rows(), m.cols(), p);
}

}  // namespace coklab
