#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <map>
#include <set>
#include <vector>

#include "dgmvp/encoding.hpp"

using namespace dgmvp;

TEST_CASE("decode maps blocks to lots and weights") {
  const EncodingSpec spec1(1, 4);
  auto [x, w] = decode(spec1, BitString::parse("1111"));
  REQUIRE(x == LotVector{15});
  REQUIRE(w[0] == Rational(1));  // a = 1/15, 15 lots

  auto [x0, w0] = decode(spec1, BitString::parse("0000"));
  REQUIRE(x0 == LotVector{0});
  REQUIRE(w0[0] == Rational(0));

  const EncodingSpec spec2(2, 2);
  auto [x2, w2] = decode(spec2, BitString::parse("1001"));
  REQUIRE(x2 == LotVector{1, 2});
  REQUIRE(w2[0] == Rational(1, 3));
  REQUIRE(w2[1] == Rational(2, 3));
}

TEST_CASE("decode rejects wrong lengths") {
  const EncodingSpec spec(2, 2);
  REQUIRE_THROWS_AS(decode(spec, BitString::parse("101")), std::invalid_argument);
}

TEST_CASE("encode then decode is the identity on lot vectors") {
  const EncodingSpec spec(3, 3);
  Rng rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    LotVector lots(spec.n);
    for (auto& x : lots) x = static_cast<std::int64_t>(rng.next_below(spec.max_lots() + 1));
    const BitString bits = encode(spec, lots);
    REQUIRE(decode(spec, bits).first == lots);
  }
}

TEST_CASE("feasibility is the budget constraint") {
  const EncodingSpec spec1(1, 3);
  REQUIRE(is_feasible(spec1, BitString::parse("111")));
  REQUIRE_FALSE(is_feasible(spec1, BitString::parse("000")));

  const EncodingSpec spec(2, 2);
  std::set<std::uint64_t> feasible;
  for (std::uint64_t s = 0; s < 16; ++s)
    if (is_feasible(spec, s)) feasible.insert(s);
  // lots summing to 3: (0,3),(1,2),(2,1),(3,0)
  REQUIRE(feasible.size() == 4);
  for (auto s : feasible) REQUIRE(total_lots(spec, s) == 3);
}

TEST_CASE("feasible counting matches enumeration and the closed form") {
  REQUIRE(feasible_count(1, 1) == 1);
  REQUIRE(feasible_count(1, 4) == 1);
  REQUIRE(feasible_count(4, 3) == 120);
  for (int n = 1; n <= 5; ++n) {
    for (int l = 1; l <= 4; ++l) {
      std::uint64_t brute = 0;
      const EncodingSpec spec(n, l);
      const std::uint64_t dim = std::uint64_t{1} << spec.qubits();
      for (std::uint64_t s = 0; s < dim; ++s)
        if (is_feasible(spec, s)) ++brute;
      REQUIRE(feasible_count(n, l) == brute);
      REQUIRE(enumerate_feasible(spec).size() == brute);
    }
  }
}

TEST_CASE("strategy counts satisfy the recursion over budgets") {
  // A(n+1, N) = sum_{m=0..N} A(n, m)
  for (int n = 1; n <= 5; ++n) {
    for (std::int64_t budget = 0; budget <= 31; ++budget) {
      std::uint64_t sum = 0;
      for (std::int64_t m = 0; m <= budget; ++m) sum += strategies_count(n, m);
      REQUIRE(strategies_count(n + 1, budget) == sum);
    }
  }
  REQUIRE(strategies_count(1, 17) == 1);
}

TEST_CASE("unconstrained region is 2^(nl) and dwarfs the constrained one") {
  REQUIRE(unconstrained_count(1, 1) == 2);
  REQUIRE(unconstrained_count(4, 3) == 4096);
  double prev_ratio = 0.0;
  for (int n = 2; n <= 5; ++n) {
    const double ratio = static_cast<double>(unconstrained_count(n, 3)) /
                         static_cast<double>(feasible_count(n, 3));
    REQUIRE(ratio > prev_ratio);
    prev_ratio = ratio;
  }
}

TEST_CASE("enumeration yields distinct feasible states in unrank order") {
  const EncodingSpec spec(2, 2);
  const auto all = enumerate_feasible(spec);
  REQUIRE(all.size() == 4);
  std::set<std::uint64_t> distinct(all.begin(), all.end());
  REQUIRE(distinct.size() == all.size());
  for (std::size_t r = 0; r < all.size(); ++r) REQUIRE(unrank_feasible(spec, r) == all[r]);

  const EncodingSpec one(1, 2);
  const auto only = enumerate_feasible(one);
  REQUIRE(only.size() == 1);
  REQUIRE(BitString(only[0], 2).str() == "11");
}

TEST_CASE("enumeration guard rejects oversized registers") {
  REQUIRE_THROWS_AS(enumerate_feasible(EncodingSpec(13, 2)), std::invalid_argument);
}

TEST_CASE("unranking endpoints are valid and distinct") {
  const EncodingSpec spec(3, 3);
  const std::uint64_t count = feasible_count(3, 3);
  const auto first = unrank_feasible(spec, 0);
  const auto last = unrank_feasible(spec, count - 1);
  REQUIRE(first != last);
  REQUIRE(is_feasible(spec, first));
  REQUIRE(is_feasible(spec, last));
}

TEST_CASE("uniform feasible sampling matches enumeration frequencies") {
  const EncodingSpec spec(2, 2);
  Rng rng(11);
  std::map<std::uint64_t, int> counts;
  const int shots = 40000;
  for (int i = 0; i < shots; ++i) ++counts[sample_feasible_uniform(spec, rng)];
  REQUIRE(counts.size() == 4);
  // each cell within 3 sigma of shots/4, and a chi-square check at p > 0.01
  const double expect = shots / 4.0;
  const double sigma = std::sqrt(shots * 0.25 * 0.75);
  double chi2 = 0.0;
  for (const auto& [state, c] : counts) {
    REQUIRE(std::abs(c - expect) < 3.0 * sigma);
    chi2 += (c - expect) * (c - expect) / expect;
  }
  REQUIRE(chi2 < 11.345);  // chi-square 99th percentile, 3 dof

  const EncodingSpec single(1, 3);
  for (int i = 0; i < 10; ++i)
    REQUIRE(sample_feasible_uniform(single, rng) == 0b111u);
}

TEST_CASE("bit string text form round-trips") {
  const BitString b = BitString::parse("110000");
  REQUIRE(b.str() == "110000");
  REQUIRE(b.word == 0b000011u);  // character i is qubit i, LSB-first
  REQUIRE_THROWS_AS(BitString::parse("10x"), std::invalid_argument);
}
