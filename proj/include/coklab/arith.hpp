#pragma once

// Integer substrate: 128-bit residue arithmetic and the deterministic RNG.
// Everything here is branch-predictable scalar code; no allocation.

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

namespace coklab {

using u8 = std::uint8_t;
using u32 = std::uint32_t;
using u64 = std::uint64_t;
using i64 = std::int64_t;
using u128 = unsigned __int128;
using i128 = __int128;

inline std::string u128_to_string(u128 x) {
  if (x == 0) return "0";
  std::string s;
  while (x > 0) {
    s.insert(s.begin(), char('0' + int(x % 10)));
    x /= 10;
  }
  return s;
}

// a*b mod m for m < 2^126. Three tiers: small moduli hit a single 64-bit
// multiply, moduli below 2^64 pay one 128-bit division, anything wider
// falls back to shift-and-add (rare; only extreme precisions land there).
inline u128 mulmod(u128 a, u128 b, u128 m) {
  if (m <= std::numeric_limits<u32>::max()) {
    return (u64)a * (u64)b % (u64)m;
  }
  if (m <= std::numeric_limits<u64>::max()) {
    return (u128)(u64)a * (u64)b % (u64)m;
  }
  u128 r = 0;
  while (b > 0) {
    if (b & 1) {
      r += a;
      if (r >= m) r -= m;
    }
    a <<= 1;
    if (a >= m) a -= m;
    b >>= 1;
  }
  return r;
}

inline u128 addmod(u128 a, u128 b, u128 m) {
  u128 r = a + b;
  return r >= m ? r - m : r;
}

inline u128 submod(u128 a, u128 b, u128 m) { return a >= b ? a - b : a + (m - b); }

inline u64 powmod_u64(u64 base, u64 exp, u64 m) {
  u64 r = 1 % m;
  base %= m;
  while (exp > 0) {
    if (exp & 1) r = (u64)((u128)r * base % m);
    base = (u64)((u128)base * base % m);
    exp >>= 1;
  }
  return r;
}

inline bool is_prime_u64(u64 n) {
  if (n < 2) return false;
  for (u64 d = 2; d * d <= n; ++d)
    if (n % d == 0) return false;
  return true;
}

// p^e with an explicit cap; throws instead of wrapping.
inline u128 checked_pow(u64 p, unsigned e, u128 cap, const char* what) {
  u128 r = 1;
  for (unsigned i = 0; i < e; ++i) {
    if (r > cap / p) throw std::overflow_error(std::string(what) + " exceeds supported range");
    r *= p;
  }
  return r;
}

// Largest v with p^v | x, capped at `cap` ("x == 0 mod p^cap" reports cap).
inline unsigned padic_val(u128 x, u64 p, unsigned cap) {
  if (x == 0) return cap;
  unsigned v = 0;
  if (p <= std::numeric_limits<u32>::max() && x <= std::numeric_limits<u64>::max()) {
    u64 y = (u64)x;
    while (v < cap && y % p == 0) {
      y /= p;
      ++v;
    }
    return v;
  }
  while (v < cap && x % p == 0) {
    x /= p;
    ++v;
  }
  return v;
}

// splitmix64 (Steele/Lea/Flood). Chosen for byte-stable golden tests and
// cheap per-sample stream construction; the constants are the published ones.
class SplitMix64 {
 public:
  explicit SplitMix64(u64 seed) : s_(seed) {}

  u64 next() {
    u64 z = (s_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Unbiased uniform draw in [0, bound) by rejection.
  u64 next_below(u64 bound) {
    u64 limit = std::numeric_limits<u64>::max() - std::numeric_limits<u64>::max() % bound;
    u64 x;
    do {
      x = next();
    } while (x >= limit);
    return x % bound;
  }

  u128 next_below_128(u128 bound) {
    if (bound <= std::numeric_limits<u64>::max()) return next_below((u64)bound);
    u128 limit = ~(u128)0 - ~(u128)0 % bound;
    u128 x;
    do {
      x = ((u128)next() << 64) | next();
    } while (x >= limit);
    return x % bound;
  }

 private:
  u64 s_;
};

inline u64 mix64(u64 z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// One independent stream per (seed, index). Sample index, not worker id,
// selects the stream, so the worker count can never influence results.
inline SplitMix64 sample_stream(u64 seed, u64 index) {
  return SplitMix64(mix64(seed + 0x9e3779b97f4a7c15ULL) ^ mix64(index + 0xd1b54a32d192ed03ULL));
}

}  // namespace coklab
