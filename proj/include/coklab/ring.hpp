#pragma once

// Local rings at finite precision: Z/p^k modeling Z_p, and the unramified
// extension R = Z_p[t]/(P(t)) with P monic and irreducible mod p. All
// arithmetic is exact mod p^k; valuations below k are exact and "x = 0 mod
// p^k" is reported as the saturated valuation k.

#include <algorithm>
#include <array>
#include <memory>
#include <stdexcept>
#include <vector>

#include "coklab/arith.hpp"

namespace coklab {

struct NotAUnitError : std::domain_error {
  explicit NotAUnitError(const std::string& what) : std::domain_error(what) {}
};

inline constexpr unsigned kMaxExtDegree = 6;

// Residue in [0, p^k).
struct Zp {
  u128 v = 0;
  friend bool operator==(const Zp&, const Zp&) = default;
};

// Coefficients of t^0..t^{d-1}, each in [0, p^k). Slots at index >= d stay 0,
// which makes default == valid for any fixed ring.
struct Ext {
  std::array<u128, kMaxExtDegree> c{};
  friend bool operator==(const Ext&, const Ext&) = default;
};

namespace fp {

// Dense polynomials over F_p, coefficients ascending, no trailing zeros.
using Poly = std::vector<u64>;

inline void trim(Poly& a) {
  while (!a.empty() && a.back() == 0) a.pop_back();
}

inline Poly mul(const Poly& a, const Poly& b, u64 p) {
  if (a.empty() || b.empty()) return {};
  Poly r(a.size() + b.size() - 1, 0);
  for (size_t i = 0; i < a.size(); ++i)
    for (size_t j = 0; j < b.size(); ++j) r[i + j] = (r[i + j] + (u128)a[i] * b[j] % p) % p;
  trim(r);
  return r;
}

// Remainder of a by monic f.
inline Poly mod(Poly a, const Poly& f, u64 p) {
  trim(a);
  while (a.size() >= f.size()) {
    u64 lead = a.back();
    size_t shift = a.size() - f.size();
    if (lead != 0)
      for (size_t i = 0; i < f.size(); ++i) {
        u64 sub = (u128)lead * f[i] % p;
        u64& tgt = a[i + shift];
        tgt = (tgt + p - sub) % p;
      }
    a.pop_back();
    trim(a);
  }
  return a;
}

inline Poly mulmod(const Poly& a, const Poly& b, const Poly& f, u64 p) {
  return mod(mul(a, b, p), f, p);
}

inline Poly gcd(Poly a, Poly b, u64 p) {
  trim(a);
  trim(b);
  while (!b.empty()) {
    u64 inv_lead = powmod_u64(b.back(), p - 2, p);
    Poly bm = b;
    for (u64& c : bm) c = (u128)c * inv_lead % p;
    a = mod(std::move(a), bm, p);
    std::swap(a, b);
  }
  return a;
}

// Extended Euclid: returns s with s*g == gcd(g, f) mod f; used to invert in
// F_p[t]/(f). Returns empty when gcd is not a unit.
inline Poly invmod(const Poly& g, const Poly& f, u64 p) {
  Poly r0 = f, r1 = mod(g, f, p);
  Poly s0 = {}, s1 = {1};
  while (!r1.empty()) {
    // quotient of r0 by r1 (general leading coefficient)
    Poly q;
    Poly rem = r0;
    u64 inv_lead = powmod_u64(r1.back(), p - 2, p);
    while (rem.size() >= r1.size()) {
      size_t shift = rem.size() - r1.size();
      u64 coef = (u128)rem.back() * inv_lead % p;
      if (q.size() < shift + 1) q.resize(shift + 1, 0);
      q[shift] = coef;
      for (size_t i = 0; i < r1.size(); ++i) {
        u64 sub = (u128)coef * r1[i] % p;
        rem[i + shift] = (rem[i + shift] + p - sub) % p;
      }
      trim(rem);
      if (rem.empty()) break;
    }
    Poly s2 = s0;
    {
      Poly qs = mul(q, s1, p);
      if (s2.size() < qs.size()) s2.resize(qs.size(), 0);
      for (size_t i = 0; i < qs.size(); ++i) s2[i] = (s2[i] + p - qs[i]) % p;
      trim(s2);
    }
    r0 = std::move(r1);
    r1 = std::move(rem);
    s0 = std::move(s1);
    s1 = std::move(s2);
  }
  if (r0.size() != 1) return {};
  u64 inv_c = powmod_u64(r0[0], p - 2, p);
  for (u64& c : s0) c = (u128)c * inv_c % p;
  trim(s0);
  return s0;
}

// Rabin test: monic f of degree d is irreducible over F_p iff t^{p^d} == t
// mod f and gcd(t^{p^{d/l}} - t, f) = 1 for every prime l | d.
inline bool irreducible(const Poly& f, u64 p) {
  size_t d = f.size() - 1;
  if (d == 0) return false;
  if (d == 1) return true;
  Poly x = {0, 1};
  // frob[i] = t^{p^i} mod f, built by repeated p-th powers
  std::vector<Poly> frob(d + 1);
  frob[0] = x;
  for (size_t i = 1; i <= d; ++i) {
    // raise to the p-th power by square-and-multiply on the exponent p
    Poly base = frob[i - 1];
    Poly acc = {1};
    u64 e = p;
    while (e > 0) {
      if (e & 1) acc = mulmod(acc, base, f, p);
      base = mulmod(base, base, f, p);
      e >>= 1;
    }
    frob[i] = std::move(acc);
  }
  if (frob[d] != mod(x, f, p)) return false;
  for (size_t l = 2; l <= d; ++l) {
    if (d % l != 0) continue;
    bool l_prime = true;
    for (size_t m = 2; m * m <= l; ++m)
      if (l % m == 0) l_prime = false;
    if (!l_prime) continue;
    Poly diff = frob[d / l];
    if (diff.size() < 2) diff.resize(2, 0);
    diff[1] = (diff[1] + p - 1) % p;
    trim(diff);
    Poly g = gcd(diff, f, p);
    if (g.size() != 1) return false;
  }
  return true;
}

}  // namespace fp

class RingParams {
 public:
  // Base ring Z/p^k (degree-1 minimal polynomial t).
  RingParams(u64 p, unsigned k) : RingParams(p, k, std::vector<i64>{0, 1}) {}

  // Extension by a monic polynomial, coefficients ascending over Z.
  RingParams(u64 p, unsigned k, const std::vector<i64>& minpoly) : p_(p), k_(k) {
    if (p < 2 || p > 10000) throw std::invalid_argument("p must be in [2, 10^4]");
    if (!is_prime_u64(p)) throw std::invalid_argument("p = " + std::to_string(p) + " is not prime");
    if (k < 1) throw std::invalid_argument("precision k must be >= 1");
    pk_ = checked_pow(p, k, (u128)1 << 126, "p^k");
    ppow_.resize(k + 1);
    ppow_[0] = 1;
    for (unsigned i = 1; i <= k; ++i) ppow_[i] = ppow_[i - 1] * p;
    if (minpoly.size() < 2 || minpoly.size() > kMaxExtDegree + 1)
      throw std::invalid_argument("minimal polynomial degree must be in [1, 6]");
    d_ = unsigned(minpoly.size() - 1);
    minpoly_.resize(d_ + 1);
    for (unsigned i = 0; i <= d_; ++i) minpoly_[i] = reduce_int(minpoly[i]);
    if (minpoly_[d_] != 1) throw std::invalid_argument("minimal polynomial must be monic");
    minpoly_p_.resize(d_ + 1);
    for (unsigned i = 0; i <= d_; ++i) minpoly_p_[i] = (u64)(minpoly_[i] % p_);
    if (!fp::irreducible(minpoly_p_, p_))
      throw std::invalid_argument("minimal polynomial is reducible mod p");
    // residue class of t: for d >= 2 the monomial itself, for d = 1 reduce
    // t == -c0 so the ring is Z/p^k relabeled.
    if (d_ >= 2)
      t_.c[1] = 1;
    else
      t_.c[0] = submod(0, minpoly_[0], pk_);
  }

  u64 p() const { return p_; }
  unsigned k() const { return k_; }
  unsigned degree() const { return d_; }
  u128 modulus() const { return pk_; }
  u128 ppow(unsigned i) const { return ppow_[i]; }
  u128 residue_field_size() const {
    return checked_pow(p_, d_, ~(u128)0 >> 1, "p^d");
  }
  const std::vector<u128>& minpoly() const { return minpoly_; }
  const Ext& t() const { return t_; }

  bool same_ring(const RingParams& o) const {
    return p_ == o.p_ && k_ == o.k_ && minpoly_ == o.minpoly_;
  }

  // ---- base scalars ----

  Zp from_int(i64 x) const { return Zp{reduce_int(x)}; }
  Zp zero() const { return Zp{}; }
  Zp one() const { return Zp{1 % pk_}; }

  Zp add(Zp a, Zp b) const { return Zp{addmod(a.v, b.v, pk_)}; }
  Zp sub(Zp a, Zp b) const { return Zp{submod(a.v, b.v, pk_)}; }
  Zp mul(Zp a, Zp b) const { return Zp{mulmod(a.v, b.v, pk_)}; }
  Zp neg(Zp a) const { return Zp{submod(0, a.v, pk_)}; }
  bool is_zero(Zp a) const { return a.v == 0; }

  unsigned valuation(Zp a) const { return padic_val(a.v, p_, k_); }

  // Exact division by p^v; caller guarantees valuation(a) >= v.
  Zp shift_down(Zp a, unsigned v) const { return Zp{a.v / ppow_[v]}; }

  Zp invert_unit(Zp x) const {
    if (valuation(x) != 0)
      throw NotAUnitError("invert_unit: valuation " + std::to_string(valuation(x)) + " > 0");
    u64 x0 = (u64)(x.v % p_);
    Zp y{powmod_u64(x0, p_ - 2, p_)};
    for (unsigned i = 0; i < lift_iters(); ++i) {
      Zp two_minus = sub(from_int(2), mul(x, y));
      y = mul(y, two_minus);
    }
    if (!(mul(x, y) == one())) throw std::logic_error("invert_unit: lift failed certificate");
    return y;
  }

  Zp sample(SplitMix64& rng) const { return Zp{rng.next_below_128(pk_)}; }

  // ---- extension scalars ----

  Ext ext_from_base(Zp a) const {
    Ext r;
    r.c[0] = a.v;
    return r;
  }
  Ext ext_zero() const { return Ext{}; }
  Ext ext_one() const { return ext_from_base(one()); }

  Ext add(const Ext& a, const Ext& b) const {
    Ext r;
    for (unsigned i = 0; i < d_; ++i) r.c[i] = addmod(a.c[i], b.c[i], pk_);
    return r;
  }
  Ext sub(const Ext& a, const Ext& b) const {
    Ext r;
    for (unsigned i = 0; i < d_; ++i) r.c[i] = submod(a.c[i], b.c[i], pk_);
    return r;
  }
  Ext neg(const Ext& a) const {
    Ext r;
    for (unsigned i = 0; i < d_; ++i) r.c[i] = submod(0, a.c[i], pk_);
    return r;
  }
  bool is_zero(const Ext& a) const {
    for (unsigned i = 0; i < d_; ++i)
      if (a.c[i] != 0) return false;
    return true;
  }

  // Schoolbook product of degree <= 2d-2, then monic reduction by minpoly.
  Ext mul(const Ext& a, const Ext& b) const {
    std::array<u128, 2 * kMaxExtDegree - 1> prod{};
    for (unsigned i = 0; i < d_; ++i) {
      if (a.c[i] == 0) continue;
      for (unsigned j = 0; j < d_; ++j)
        prod[i + j] = addmod(prod[i + j], mulmod(a.c[i], b.c[j], pk_), pk_);
    }
    for (unsigned deg = 2 * d_ - 2; deg >= d_ && deg < prod.size(); --deg) {
      u128 lead = prod[deg];
      if (lead != 0) {
        prod[deg] = 0;
        unsigned shift = deg - d_;
        for (unsigned i = 0; i < d_; ++i)
          prod[shift + i] = submod(prod[shift + i], mulmod(lead, minpoly_[i], pk_), pk_);
      }
      if (deg == d_) break;
    }
    Ext r;
    for (unsigned i = 0; i < d_; ++i) r.c[i] = prod[i];
    return r;
  }

  unsigned valuation(const Ext& a) const {
    unsigned v = k_;
    for (unsigned i = 0; i < d_ && v > 0; ++i) v = std::min(v, padic_val(a.c[i], p_, k_));
    return v;
  }

  Ext shift_down(const Ext& a, unsigned v) const {
    Ext r;
    for (unsigned i = 0; i < d_; ++i) r.c[i] = a.c[i] / ppow_[v];
    return r;
  }

  Ext invert_unit(const Ext& x) const {
    if (valuation(x) != 0)
      throw NotAUnitError("invert_unit: extension element is not a unit");
    fp::Poly xbar(d_);
    for (unsigned i = 0; i < d_; ++i) xbar[i] = (u64)(x.c[i] % p_);
    fp::trim(xbar);
    fp::Poly inv = fp::invmod(xbar, minpoly_p_, p_);
    if (inv.empty()) throw std::logic_error("invert_unit: residue field inversion failed");
    Ext y;
    for (size_t i = 0; i < inv.size(); ++i) y.c[i] = inv[i];
    Ext two = ext_from_base(from_int(2));
    for (unsigned i = 0; i < lift_iters(); ++i) y = mul(y, sub(two, mul(x, y)));
    if (!(mul(x, y) == ext_one())) throw std::logic_error("invert_unit: lift failed certificate");
    return y;
  }

  Ext sample_ext(SplitMix64& rng) const {
    Ext r;
    for (unsigned i = 0; i < d_; ++i) r.c[i] = rng.next_below_128(pk_);
    return r;
  }

 private:
  unsigned lift_iters() const {
    unsigned ceil_log2 = 0;
    while ((1u << ceil_log2) < k_) ++ceil_log2;
    return ceil_log2 + 1;
  }

  u128 reduce_int(i64 x) const {
    i128 r = (i128)x % (i128)pk_;
    if (r < 0) r += (i128)pk_;
    return (u128)r;
  }

  u64 p_;
  unsigned k_;
  u128 pk_;
  std::vector<u128> ppow_;
  unsigned d_;
  std::vector<u128> minpoly_;
  fp::Poly minpoly_p_;
  Ext t_;
};

using RingRef = std::shared_ptr<const RingParams>;

inline RingRef make_ring(u64 p, unsigned k) { return std::make_shared<RingParams>(p, k); }
inline RingRef make_ring(u64 p, unsigned k, const std::vector<i64>& minpoly) {
  return std::make_shared<RingParams>(p, k, minpoly);
}

}  // namespace coklab
