#pragma once

// Seeded sampling experiments: Haar matrices at precision k, joint cokernel
// statistics over several residue rings, shifted-pair statistics, the
// multiplicative-vs-additive linearization probe, and an exhaustive F_p
// enumerator. Every sample owns the RNG stream indexed by its sample number,
// so results are independent of the worker count by construction.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "coklab/arith.hpp"
#include "coklab/limits.hpp"
#include "coklab/matrix.hpp"
#include "coklab/ring.hpp"

namespace coklab {

struct ConfigError : std::invalid_argument {
  explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

// Default seed used when a run does not specify one; documented in README.
inline constexpr u64 kDefaultSeed = 314159265358979323ULL;

enum class ShiftFamilyKind {
  none,            // zero shift, the two coordinates coincide
  p_block_half,    // diag(p * I_{floor(n/2)}, I_{n - floor(n/2)})
  identity_block,  // diag(I_r, 0) for a fixed rank r
  explicit_matrix, // entries given literally
};

struct ShiftSpec {
  ShiftFamilyKind kind = ShiftFamilyKind::none;
  unsigned identity_rank = 0;            // identity_block only
  std::vector<std::vector<i64>> entries; // explicit_matrix only, row-major
};

struct ExperimentConfig {
  u64 p = 2;
  unsigned k = 4;
  std::vector<unsigned> n_values; // sweep; the run_* entry points take one n
  u64 sample_count = 0;
  u64 seed = kDefaultSeed;
  unsigned workers = 1;
  std::vector<PolynomialSpec> polynomials;
  ShiftSpec shift;
  bool gl_condition = false;
  unsigned linearization_v = 0; // 0 = not set
};

struct EmpiricalJoint {
  // one partition (parts descending) per coordinate of the class tuple
  using Key = std::vector<std::vector<unsigned>>;

  std::map<Key, u64> counts;
  u64 undetermined_count = 0; // some coordinate saturated or beyond trust
  u64 total = 0;
  u64 seed = 0;
  unsigned n = 0;
  double wall_seconds = 0.0; // metadata only, never part of result records
};

struct LinearizationResult {
  EmpiricalJoint gl_side;   // (cok(A - I), cok(A - (p^v + 1)I)), A Haar on GL_n
  EmpiricalJoint haar_side; // (cok(M), cok(M - p^v I)), M Haar on M_n
  double tv_determined = 0.0;
  u64 prank_mismatches = 0; // per-sample p-rank equality violations, expect 0
};

// A class is recorded only when exact at working precision: no saturated
// entries and every part at most k - 2 (one step of slack below the
// saturation boundary). Everything else counts as undetermined.
inline bool class_trusted(const CokernelClass& c, unsigned k) {
  return c.saturated_count == 0 && c.max_part() + 2 <= k;
}

inline ZpMatrix sample_matrix(unsigned n, const RingRef& ring, SplitMix64& rng) {
  if (n == 0) throw std::invalid_argument("sample_matrix: n must be >= 1");
  ZpMatrix m(ring, n, n);
  u128 mod = ring->modulus();
  for (unsigned i = 0; i < n; ++i)
    for (unsigned j = 0; j < n; ++j) m.at(i, j).v = rng.next_below_128(mod);
  return m;
}

// Haar on GL_n(Z_p) by rejection: resample until the mod-p reduction is
// invertible. Expected number of attempts is 1/alpha_{p,n} <= ~3.47.
inline ZpMatrix sample_gl(unsigned n, const RingRef& ring, SplitMix64& rng) {
  while (true) {
    ZpMatrix m = sample_matrix(n, ring, rng);
    if (p_rank(m) == 0) return m;
  }
}

namespace detail {

inline unsigned effective_n(const ExperimentConfig& cfg) {
  if (cfg.n_values.size() != 1)
    throw ConfigError("run entry points take exactly one n; expand sweeps upstream");
  if (cfg.n_values[0] == 0) throw ConfigError("n must be >= 1");
  return cfg.n_values[0];
}

inline void validate_common(const ExperimentConfig& cfg) {
  if (cfg.sample_count == 0) throw ConfigError("sample count must be >= 1");
  if (cfg.k < 2) throw ConfigError("precision k must be >= 2");
  if (cfg.workers == 0) throw ConfigError("worker count must be >= 1");
}

// Static partition of [0, total) into one contiguous block per worker; each
// block accumulates into its own Acc, merged in worker order at the end.
template <class Acc, class PerSample>
Acc run_partitioned(u64 total, unsigned workers, PerSample&& per_sample) {
  if (workers > total) workers = unsigned(std::max<u64>(total, 1));
  std::vector<Acc> accs(workers);
  if (workers == 1) {
    for (u64 i = 0; i < total; ++i) per_sample(i, accs[0]);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    u64 chunk = total / workers, rem = total % workers, lo = 0;
    for (unsigned w = 0; w < workers; ++w) {
      u64 hi = lo + chunk + (w < rem ? 1 : 0);
      pool.emplace_back([&per_sample, &accs, w, lo, hi]() {
        for (u64 i = lo; i < hi; ++i) per_sample(i, accs[w]);
      });
      lo = hi;
    }
    for (auto& t : pool) t.join();
  }
  for (unsigned w = 1; w < workers; ++w) accs[0].merge(accs[w]);
  return std::move(accs[0]);
}

struct JointAcc {
  std::map<EmpiricalJoint::Key, u64> counts;
  u64 undetermined = 0;
  u64 mismatches = 0;

  void merge(const JointAcc& o) {
    for (const auto& [key, c] : o.counts) counts[key] += c;
    undetermined += o.undetermined;
    mismatches += o.mismatches;
  }
};

inline EmpiricalJoint finish(JointAcc&& acc, const ExperimentConfig& cfg, unsigned n,
                             std::chrono::steady_clock::time_point t0) {
  EmpiricalJoint out;
  out.counts = std::move(acc.counts);
  out.undetermined_count = acc.undetermined;
  out.total = cfg.sample_count;
  out.seed = cfg.seed;
  out.n = n;
  out.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

// Folds the tuple of classes into a key, or reports the sample undetermined.
struct KeyBuilder {
  EmpiricalJoint::Key key;
  bool ok = true;
  unsigned k;

  explicit KeyBuilder(unsigned precision, size_t coords) : k(precision) {
    key.reserve(coords);
  }
  void add(const CokernelClass& c) {
    if (!ok) return;
    if (!class_trusted(c, k)) {
      ok = false;
      return;
    }
    key.push_back(c.parts);
  }
  void commit(JointAcc& acc) {
    if (ok) ++acc.counts[std::move(key)];
    else ++acc.undetermined;
  }
};

inline ZpMatrix diagonal_shift(const ZpMatrix& m, const Zp& c) {
  ZpMatrix out = m;
  const RingParams& ring = out.ring();
  for (unsigned i = 0; i < out.rows(); ++i) out.at(i, i) = ring.sub(out.at(i, i), c);
  return out;
}

}  // namespace detail

inline ZpMatrix build_shift(const ShiftSpec& spec, unsigned n, const RingRef& ring) {
  ZpMatrix b(ring, n, n);
  switch (spec.kind) {
    case ShiftFamilyKind::none:
      break;
    case ShiftFamilyKind::p_block_half: {
      unsigned r = n / 2;
      for (unsigned i = 0; i < n; ++i)
        b.at(i, i) = ring->from_int(i < r ? i64(ring->p()) : 1);
      break;
    }
    case ShiftFamilyKind::identity_block: {
      if (spec.identity_rank > n)
        throw ConfigError("identity_block rank exceeds matrix size");
      for (unsigned i = 0; i < spec.identity_rank; ++i) b.at(i, i) = ring->one();
      break;
    }
    case ShiftFamilyKind::explicit_matrix: {
      if (spec.entries.size() != n)
        throw ConfigError("explicit shift has " + std::to_string(spec.entries.size()) +
                          " rows, expected " + std::to_string(n));
      for (unsigned i = 0; i < n; ++i) {
        if (spec.entries[i].size() != n)
          throw ConfigError("explicit shift row " + std::to_string(i) + " has " +
                            std::to_string(spec.entries[i].size()) + " entries, expected " +
                            std::to_string(n));
        for (unsigned j = 0; j < n; ++j) b.at(i, j) = ring->from_int(spec.entries[i][j]);
      }
      break;
    }
  }
  return b;
}

// Joint cokernel classes of P_j(A) for Haar A, one coordinate per polynomial.
// Degree >= 2 polynomials are classified over their residue ring via the
// characteristic matrix t*I - A, so parts are lengths of that ring's modules;
// degree-1 polynomials are evaluated directly over the base ring, which is
// the same module up to the degree-1 ring identification.
inline EmpiricalJoint run_joint(const ExperimentConfig& cfg) {
  detail::validate_common(cfg);
  unsigned n = detail::effective_n(cfg);
  if (cfg.polynomials.empty()) throw ConfigError("joint run needs at least one polynomial");

  std::vector<std::vector<u64>> reductions;
  for (const PolynomialSpec& poly : cfg.polynomials) {
    poly.validate();
    std::vector<u64> red = poly.reduction_mod_p(cfg.p);
    if (red.size() != size_t(poly.degree()) + 1)
      throw ConfigError("polynomial degree drops mod p; not monic of stated degree");
    if (!fp::irreducible(red, cfg.p))
      throw ConfigError("polynomial reduction mod p is not irreducible");
    for (const auto& other : reductions)
      if (other == red) throw ConfigError("polynomial reductions mod p must be pairwise distinct");
    reductions.push_back(std::move(red));
  }

  RingRef base = make_ring(cfg.p, cfg.k);
  struct Route {
    PolynomialSpec poly;
    RingRef ext; // null: evaluate over the base ring
  };
  std::vector<Route> routes;
  for (const PolynomialSpec& poly : cfg.polynomials) {
    Route r{poly, nullptr};
    if (poly.degree() >= 2) r.ext = make_ring(cfg.p, cfg.k, poly.coeffs);
    routes.push_back(std::move(r));
  }

  auto t0 = std::chrono::steady_clock::now();
  auto acc = detail::run_partitioned<detail::JointAcc>(
      cfg.sample_count, cfg.workers, [&](u64 idx, detail::JointAcc& a) {
        SplitMix64 rng = sample_stream(cfg.seed, idx);
        ZpMatrix m = cfg.gl_condition ? sample_gl(n, base, rng) : sample_matrix(n, base, rng);
        detail::KeyBuilder kb(cfg.k, routes.size());
        for (const Route& route : routes) {
          if (!kb.ok) break;
          kb.add(route.ext ? cokernel_class(char_matrix(m, route.ext))
                           : cokernel_class(poly_eval_matrix(m, route.poly)));
        }
        kb.commit(a);
      });
  return detail::finish(std::move(acc), cfg, n, t0);
}

// Pairs (cok(A), cok(A + B)) for Haar A and the configured shift B.
inline EmpiricalJoint run_shift(const ExperimentConfig& cfg) {
  detail::validate_common(cfg);
  unsigned n = detail::effective_n(cfg);
  RingRef base = make_ring(cfg.p, cfg.k);
  ZpMatrix b = build_shift(cfg.shift, n, base);

  auto t0 = std::chrono::steady_clock::now();
  auto acc = detail::run_partitioned<detail::JointAcc>(
      cfg.sample_count, cfg.workers, [&](u64 idx, detail::JointAcc& a) {
        SplitMix64 rng = sample_stream(cfg.seed, idx);
        ZpMatrix m = cfg.gl_condition ? sample_gl(n, base, rng) : sample_matrix(n, base, rng);
        detail::KeyBuilder kb(cfg.k, 2);
        kb.add(cokernel_class(m));
        if (kb.ok) kb.add(cokernel_class(mat_add(m, b)));
        kb.commit(a);
      });
  return detail::finish(std::move(acc), cfg, n, t0);
}

// Total-variation distance between the determined parts of two empirical
// joints, frequencies taken against each side's full sample count. The
// undetermined mass sits in each joint separately and is not folded in.
inline double tv_between_determined(const EmpiricalJoint& a, const EmpiricalJoint& b) {
  if (a.total == 0 || b.total == 0)
    throw std::invalid_argument("tv_between_determined: empty sample set");
  double sum = 0.0;
  auto ia = a.counts.begin();
  auto ib = b.counts.begin();
  while (ia != a.counts.end() || ib != b.counts.end()) {
    double fa = 0.0, fb = 0.0;
    if (ib == b.counts.end() || (ia != a.counts.end() && ia->first < ib->first)) {
      fa = double(ia->second) / double(a.total);
      ++ia;
    } else if (ia == a.counts.end() || ib->first < ia->first) {
      fb = double(ib->second) / double(b.total);
      ++ib;
    } else {
      fa = double(ia->second) / double(a.total);
      fb = double(ib->second) / double(b.total);
      ++ia;
      ++ib;
    }
    sum += std::abs(fa - fb);
  }
  return 0.5 * sum;
}

// Multiplicative vs additive linearization probe. Side 1 samples A Haar on
// GL_n and records (cok(A - I), cok(A - (p^v + 1)I)); side 2 samples M Haar
// on M_n and records (cok(M), cok(M - p^v I)). Per sample, the two
// coordinates coincide mod p, so their p-ranks must agree; violations are
// counted and expected to be zero. No equality between the sides is
// asserted; the TV distance between their determined classes is data.
inline LinearizationResult run_linearization(const ExperimentConfig& cfg) {
  detail::validate_common(cfg);
  unsigned n = detail::effective_n(cfg);
  if (cfg.p == 2) throw ConfigError("linearization probe requires odd p");
  unsigned v = cfg.linearization_v;
  if (v < 1) throw ConfigError("linearization needs shift valuation v >= 1");
  if (v >= cfg.k) throw ConfigError("p^v must stay below the working modulus p^k");

  RingRef base = make_ring(cfg.p, cfg.k);
  Zp one = base->one();
  // p^v as a ring element; v < k keeps this below the modulus, hence exact
  Zp pv{base->ppow(v)};
  Zp pv_plus_1 = base->add(pv, one);

  auto classify_pair = [&](const ZpMatrix& m1, const ZpMatrix& m2, detail::JointAcc& a) {
    CokernelClass c1 = cokernel_class(m1);
    CokernelClass c2 = cokernel_class(m2);
    if (c1.p_rank() != c2.p_rank()) ++a.mismatches;
    detail::KeyBuilder kb(cfg.k, 2);
    kb.add(c1);
    kb.add(c2);
    kb.commit(a);
  };

  auto t0 = std::chrono::steady_clock::now();
  auto gl_acc = detail::run_partitioned<detail::JointAcc>(
      cfg.sample_count, cfg.workers, [&](u64 idx, detail::JointAcc& a) {
        SplitMix64 rng = sample_stream(cfg.seed, idx);
        ZpMatrix m = sample_gl(n, base, rng);
        classify_pair(detail::diagonal_shift(m, one), detail::diagonal_shift(m, pv_plus_1), a);
      });
  LinearizationResult out;
  out.prank_mismatches = gl_acc.mismatches;
  out.gl_side = detail::finish(std::move(gl_acc), cfg, n, t0);

  auto t1 = std::chrono::steady_clock::now();
  auto add_acc = detail::run_partitioned<detail::JointAcc>(
      cfg.sample_count, cfg.workers, [&](u64 idx, detail::JointAcc& a) {
        // independent streams: indices offset by the sample count
        SplitMix64 rng = sample_stream(cfg.seed, cfg.sample_count + idx);
        ZpMatrix m = sample_matrix(n, base, rng);
        classify_pair(m, detail::diagonal_shift(m, pv), a);
      });
  out.prank_mismatches += add_acc.mismatches;
  out.haar_side = detail::finish(std::move(add_acc), cfg, n, t1);
  out.tv_determined = tv_between_determined(out.gl_side, out.haar_side);
  return out;
}

// Exact probability over all p^{n^2} matrices A in M_n(F_p) that both A and
// A + shift are invertible. shift is row-major with entries already in
// [0, p).
inline BigRat enum_fp_exact(unsigned n, u64 p, const std::vector<u64>& shift) {
  if (n == 0) throw std::invalid_argument("enum_fp_exact: n must be >= 1");
  if (!is_prime_u64(p)) throw std::invalid_argument("enum_fp_exact: p must be prime");
  if (shift.size() != size_t(n) * n)
    throw std::invalid_argument("enum_fp_exact: shift must have n^2 entries");
  for (u64 e : shift)
    if (e >= p) throw std::invalid_argument("enum_fp_exact: shift entries must lie in [0, p)");
  u128 space;
  try {
    space = checked_pow(p, n * n, (u128)1 << 62, "matrix space");
  } catch (const std::overflow_error&) {
    throw TooLargeError("p^(n^2) exceeds 2^26");
  }
  if (space > ((u128)1 << 26)) throw TooLargeError("p^(n^2) exceeds 2^26");

  std::vector<u64> entries(size_t(n) * n, 0);
  std::vector<u64> shifted(size_t(n) * n);
  u64 count = 0;
  unsigned full = n;
  while (true) {
    if (fp_rank(entries, n, n, p) == full) {
      for (size_t i = 0; i < entries.size(); ++i) {
        shifted[i] = entries[i] + shift[i];
        if (shifted[i] >= p) shifted[i] -= p;
      }
      if (fp_rank(shifted, n, n, p) == full) ++count;
    }
    size_t pos = 0;
    while (pos < entries.size() && ++entries[pos] == p) entries[pos++] = 0;
    if (pos == entries.size()) break;
  }
  return BigRat(BigInt(count), BigInt(u64(space))); // space <= 2^26 fits
}

// TV distance between an empirical joint and a finite list of theoretical
// masses; the unlisted remainder on each side is lumped into one "other"
// bucket, and undetermined samples land there on the empirical side.
inline double tv_distance(const EmpiricalJoint& emp,
                          const std::map<EmpiricalJoint::Key, LimitValue>& theo) {
  if (emp.total == 0) throw std::invalid_argument("tv_distance: empty sample set");
  double total = double(emp.total);
  double sum = 0.0, emp_listed = 0.0, theo_listed = 0.0;
  for (const auto& [key, lv] : theo) {
    auto it = emp.counts.find(key);
    double f = it == emp.counts.end() ? 0.0 : double(it->second) / total;
    sum += std::abs(f - lv.value);
    emp_listed += f;
    theo_listed += lv.value;
  }
  sum += std::abs((1.0 - emp_listed) - (1.0 - theo_listed));
  return 0.5 * sum;
}

}  // namespace coklab
