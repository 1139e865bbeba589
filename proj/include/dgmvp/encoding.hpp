#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "dgmvp/rational.hpp"
#include "dgmvp/rng.hpp"

namespace dgmvp {

/// Binary block encoding: asset t's lot count is stored in l bits,
/// x_t = sum_k 2^{k-1} z_t^k, and the unit trading lot is a = 1/(2^l - 1).
/// Qubit q = (t-1)*l + (k-1) holds z_t^k (asset-major, k=1 is the least
/// significant bit of a block).
struct EncodingSpec {
  int n = 1;  // asset count
  int l = 1;  // bits per asset

  EncodingSpec() = default;
  EncodingSpec(int assets, int block_len) : n(assets), l(block_len) {
    if (n < 1 || l < 1) throw std::invalid_argument("EncodingSpec: n and l must be >= 1");
    if (n * l > 63) throw std::invalid_argument("EncodingSpec: n*l too large for 64-bit states");
  }

  int qubits() const { return n * l; }
  /// Maximum lots per asset, D = 2^l - 1; also the total budget in lots.
  std::int64_t max_lots() const { return (std::int64_t{1} << l) - 1; }
  Rational unit_lot() const { return Rational(1, max_lots()); }
  /// Global qubit index of z_t^k (t, k are 1-based).
  int qubit_index(int t, int k) const { return (t - 1) * l + (k - 1); }
};

/// A computational basis state over n*l qubits; bit q of `word` is the value
/// of qubit q. Text form is the qubit values in index order (asset-major,
/// LSB-first within each block), e.g. maxbias for n=3, l=2 is "110000".
struct BitString {
  std::uint64_t word = 0;
  int nbits = 0;

  BitString() = default;
  BitString(std::uint64_t w, int bits) : word(w), nbits(bits) {}

  int bit(int i) const { return static_cast<int>((word >> i) & 1u); }

  std::string str() const {
    std::string s(nbits, '0');
    for (int i = 0; i < nbits; ++i)
      if (bit(i)) s[i] = '1';
    return s;
  }

  static BitString parse(const std::string& s) {
    BitString b(0, static_cast<int>(s.size()));
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s[i] == '1')
        b.word |= std::uint64_t{1} << i;
      else if (s[i] != '0')
        throw std::invalid_argument("BitString::parse: expected 0/1");
    }
    return b;
  }
};

using LotVector = std::vector<std::int64_t>;
using WeightVector = std::vector<Rational>;

inline LotVector decode_lots(const EncodingSpec& spec, std::uint64_t state) {
  LotVector x(spec.n);
  const std::uint64_t mask = (std::uint64_t{1} << spec.l) - 1;
  for (int t = 0; t < spec.n; ++t) x[t] = static_cast<std::int64_t>((state >> (t * spec.l)) & mask);
  return x;
}

inline std::pair<LotVector, WeightVector> decode(const EncodingSpec& spec, const BitString& bits) {
  if (bits.nbits != spec.qubits())
    throw std::invalid_argument("decode: bit string length does not match n*l");
  LotVector x = decode_lots(spec, bits.word);
  WeightVector w;
  w.reserve(spec.n);
  const Rational a = spec.unit_lot();
  for (auto xi : x) w.push_back(Rational(xi) * a);
  return {std::move(x), std::move(w)};
}

inline BitString encode(const EncodingSpec& spec, const LotVector& lots) {
  if (static_cast<int>(lots.size()) != spec.n)
    throw std::invalid_argument("encode: lot vector length mismatch");
  std::uint64_t w = 0;
  for (int t = 0; t < spec.n; ++t) {
    if (lots[t] < 0 || lots[t] > spec.max_lots())
      throw std::invalid_argument("encode: lot count out of range");
    w |= static_cast<std::uint64_t>(lots[t]) << (t * spec.l);
  }
  return BitString(w, spec.qubits());
}

inline std::int64_t total_lots(const EncodingSpec& spec, std::uint64_t state) {
  std::int64_t sum = 0;
  const std::uint64_t mask = (std::uint64_t{1} << spec.l) - 1;
  for (int t = 0; t < spec.n; ++t) sum += static_cast<std::int64_t>((state >> (t * spec.l)) & mask);
  return sum;
}

/// Budget constraint: sum of lots equals 2^l - 1 (equivalently sum w_i = 1).
inline bool is_feasible(const EncodingSpec& spec, std::uint64_t state) {
  return total_lots(spec, state) == spec.max_lots();
}

inline bool is_feasible(const EncodingSpec& spec, const BitString& bits) {
  if (bits.nbits != spec.qubits())
    throw std::invalid_argument("is_feasible: bit string length mismatch");
  return is_feasible(spec, bits.word);
}

namespace detail {
inline std::uint64_t checked_mul(std::uint64_t a, std::uint64_t b) {
  std::uint64_t r;
  if (__builtin_mul_overflow(a, b, &r)) throw std::overflow_error("binomial overflows 64 bits");
  return r;
}
}  // namespace detail

/// Exact binomial coefficient with overflow detection.
inline std::uint64_t binomial(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0;
  if (k > n - k) k = n - k;
  std::uint64_t r = 1;
  for (std::uint64_t i = 1; i <= k; ++i) {
    // r * (n-k+i) / i is integral at every step
    const std::uint64_t num = n - k + i;
    const std::uint64_t g = std::gcd(num, i);
    r = detail::checked_mul(r / (i / g), num / g);
  }
  return r;
}

/// Number of ways to spend N lots across n assets: C(N + n - 1, n - 1).
inline std::uint64_t strategies_count(int n, std::int64_t budget) {
  if (n < 1 || budget < 0) throw std::invalid_argument("strategies_count: bad arguments");
  return binomial(static_cast<std::uint64_t>(budget + n - 1), static_cast<std::uint64_t>(n - 1));
}

/// Size of the budget-feasible region: B(n, l) = C(2^l + n - 2, n - 1).
inline std::uint64_t feasible_count(int n, int l) {
  if (n < 1 || l < 1) throw std::invalid_argument("feasible_count: n and l must be >= 1");
  return strategies_count(n, (std::int64_t{1} << l) - 1);
}

/// Size of the unconstrained region: 2^{nl}.
inline std::uint64_t unconstrained_count(int n, int l) {
  if (n < 1 || l < 1) throw std::invalid_argument("unconstrained_count: n and l must be >= 1");
  if (n * l >= 64) throw std::overflow_error("unconstrained_count overflows 64 bits");
  return std::uint64_t{1} << (n * l);
}

inline constexpr int kEnumerationGuardQubits = 24;

namespace detail {
inline void check_enumeration_guard(const EncodingSpec& spec) {
  if (spec.qubits() > kEnumerationGuardQubits)
    throw std::invalid_argument("feasible-set enumeration limited to n*l <= 24 qubits");
}
}  // namespace detail

/// Unrank the `rank`-th feasible state (0-based). States are ordered by the
/// lot count of asset 1 ascending, then asset 2, and so on; this is the same
/// order enumerate_feasible produces.
inline std::uint64_t unrank_feasible(const EncodingSpec& spec, std::uint64_t rank) {
  std::int64_t remaining = spec.max_lots();
  std::uint64_t state = 0;
  for (int t = 0; t < spec.n; ++t) {
    if (t == spec.n - 1) {
      state |= static_cast<std::uint64_t>(remaining) << (t * spec.l);
      break;
    }
    for (std::int64_t v = 0;; ++v) {
      const std::uint64_t below = strategies_count(spec.n - 1 - t, remaining - v);
      if (rank < below) {
        state |= static_cast<std::uint64_t>(v) << (t * spec.l);
        remaining -= v;
        break;
      }
      rank -= below;
    }
  }
  return state;
}

/// Single-consumer iterator over the feasible set, in unranking order
/// (lot vectors in lexicographic order, asset 1 ascending first).
class FeasibleEnumerator {
 public:
  explicit FeasibleEnumerator(const EncodingSpec& spec) : spec_(spec), lots_(spec.n, 0) {
    detail::check_enumeration_guard(spec);
    lots_.back() = spec.max_lots();
    done_ = false;
  }

  bool next(std::uint64_t& state) {
    if (done_) return false;
    state = encode(spec_, lots_).word;
    advance();
    return true;
  }

 private:
  void advance() {
    const int n = spec_.n;
    // Rightmost position with mass strictly to its right can take one lot;
    // the freed remainder restarts lexicographically from the tail.
    int j = n - 2;
    std::int64_t mass = (n >= 2) ? lots_[n - 1] : 0;
    while (j >= 0 && mass == 0) {
      --j;
      if (j >= 0) mass += lots_[j + 1];
    }
    if (j < 0) {
      done_ = true;
      return;
    }
    ++lots_[j];
    for (int u = j + 1; u < n; ++u) lots_[u] = 0;
    lots_[n - 1] = mass - 1;
  }

  EncodingSpec spec_;
  LotVector lots_;
  bool done_ = true;
};

/// All feasible states, materialized (guarded at n*l <= 24).
inline std::vector<std::uint64_t> enumerate_feasible(const EncodingSpec& spec) {
  FeasibleEnumerator it(spec);
  std::vector<std::uint64_t> out;
  out.reserve(feasible_count(spec.n, spec.l));
  std::uint64_t s;
  while (it.next(s)) out.push_back(s);
  return out;
}

/// Uniform draw over the feasible set by unranking a uniform index. Parts of
/// the composition never exceed 2^l - 1, so the per-asset cap never binds.
inline std::uint64_t sample_feasible_uniform(const EncodingSpec& spec, Rng& rng) {
  const std::uint64_t count = feasible_count(spec.n, spec.l);
  return unrank_feasible(spec, rng.next_below(count));
}

}  // namespace dgmvp
