#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>

#include "dgmvp/circuits.hpp"
#include "dgmvp/market_data.hpp"
#include "dgmvp/metrics.hpp"
#include "dgmvp/pauli.hpp"

using namespace dgmvp;

namespace {
CovarianceMatrix diag_matrix(std::initializer_list<double> d) {
  CovarianceMatrix cov;
  const int n = static_cast<int>(d.size());
  cov.sigma = Eigen::MatrixXd::Zero(n, n);
  int i = 0;
  for (double v : d) {
    cov.sigma(i, i) = v;
    cov.tickers.push_back("T" + std::to_string(i));
    ++i;
  }
  return cov;
}
}  // namespace

TEST_CASE("continuous minimum-variance weights") {
  SECTION("identity risk spreads evenly") {
    Rng rng(1);
    CovarianceMatrix cov;
    cov.sigma = Eigen::MatrixXd::Identity(4, 4);
    const auto w = gmvp_continuous(cov);
    for (int i = 0; i < 4; ++i) REQUIRE(w(i) == Catch::Approx(0.25));
  }
  SECTION("two-asset closed form") {
    const auto w = gmvp_continuous(diag_matrix({1.0, 4.0}));
    REQUIRE(w(0) == Catch::Approx(0.8));
    REQUIRE(w(1) == Catch::Approx(0.2));
  }
  SECTION("budget, nonnegativity and random-probe optimality") {
    Rng rng(2);
    for (int trial = 0; trial < 10; ++trial) {
      const int n = 2 + static_cast<int>(rng.next_below(4));
      const auto cov = synthetic_spd(rng, n);
      const auto w = gmvp_continuous(cov);
      REQUIRE(w.sum() == Catch::Approx(1.0));
      REQUIRE(w.minCoeff() >= -1e-12);
      const double fw = w.dot(cov.sigma * w);
      for (int probe = 0; probe < 1000; ++probe) {
        // random point on the simplex
        Eigen::VectorXd v(n);
        double s = 0;
        for (int i = 0; i < n; ++i) {
          v(i) = -std::log(1.0 - rng.next_double());
          s += v(i);
        }
        v /= s;
        REQUIRE(fw <= v.dot(cov.sigma * v) + 1e-9);
      }
    }
  }
  SECTION("KKT residual on the active set") {
    Rng rng(3);
    for (int trial = 0; trial < 10; ++trial) {
      const auto cov = synthetic_spd(rng, 4);
      const auto w = gmvp_continuous(cov);
      const Eigen::VectorXd grad = 2.0 * cov.sigma * w;
      // stationarity: gradient equal on the support, no smaller off it
      double lambda = 0.0;
      int free_count = 0;
      for (int i = 0; i < 4; ++i)
        if (w(i) > 1e-10) {
          lambda += grad(i);
          ++free_count;
        }
      lambda /= free_count;
      for (int i = 0; i < 4; ++i) {
        if (w(i) > 1e-10)
          REQUIRE(std::abs(grad(i) - lambda) < 1e-8 * std::max(1.0, std::abs(lambda)));
        else
          REQUIRE(grad(i) >= lambda - 1e-8);
      }
    }
  }
}

TEST_CASE("ranked rounding of continuous weights") {
  const EncodingSpec spec(2, 2);  // a = 1/3
  SECTION("on-grid weights are represented exactly") {
    Eigen::VectorXd w(2);
    w << 2.0 / 3.0, 1.0 / 3.0;
    const auto state = warm_start_round(spec, w);
    REQUIRE(decode_lots(spec, state) == LotVector{2, 1});
  }
  SECTION("half-half splits break the tie toward asset 1") {
    Eigen::VectorXd w(2);
    w << 0.5, 0.5;
    const auto state = warm_start_round(spec, w);
    REQUIRE(decode_lots(spec, state) == LotVector{2, 1});
  }
  SECTION("output is always feasible and within one lot of the target") {
    Rng rng(4);
    for (int trial = 0; trial < 500; ++trial) {
      const int n = 2 + static_cast<int>(rng.next_below(4));
      const int l = 1 + static_cast<int>(rng.next_below(3));
      const EncodingSpec sp(n, l);
      Eigen::VectorXd w(n);
      double s = 0;
      for (int i = 0; i < n; ++i) {
        w(i) = -std::log(1.0 - rng.next_double());
        s += w(i);
      }
      w /= s;
      const auto state = warm_start_round(sp, w);
      REQUIRE(is_feasible(sp, state));
      const auto lots = decode_lots(sp, state);
      for (int i = 0; i < n; ++i) {
        const double target = w(i) * static_cast<double>(sp.max_lots());
        REQUIRE(std::abs(static_cast<double>(lots[i]) - target) < 1.0 + 1e-9);
      }
    }
  }
}

TEST_CASE("initial states are feasible basis states") {
  Rng rng(5);
  const EncodingSpec spec(3, 2);
  const auto sigma = synthetic_spd(rng, 3);
  SECTION("maxbias puts the whole budget on asset 1") {
    Rng r(0);
    const auto s = initial_basis_state(InitialState::MaxBias, spec, sigma, r);
    REQUIRE(BitString(s, spec.qubits()).str() == "110000");
  }
  SECTION("equal-weighted splits the lots as evenly as the grid allows") {
    Rng r(0);
    const auto s = initial_basis_state(InitialState::EqualWeighted, spec, sigma, r);
    REQUIRE(decode_lots(spec, s) == LotVector{1, 1, 1});
    // n=2, l=2: 3 lots over 2 assets -> (2, 1)
    const EncodingSpec sp2(2, 2);
    const auto sigma2 = synthetic_spd(rng, 2);
    const auto s2 = initial_basis_state(InitialState::EqualWeighted, sp2, sigma2, r);
    REQUIRE(decode_lots(sp2, s2) == LotVector{2, 1});
  }
  SECTION("every variant lands in the feasible set") {
    for (const auto kind : {InitialState::MaxBias, InitialState::WarmStarted,
                            InitialState::EqualWeighted, InitialState::RandomWeighted}) {
      Rng r(11);
      const auto s = initial_basis_state(kind, spec, sigma, r);
      REQUIRE(is_feasible(spec, s));
    }
  }
  SECTION("prepare_initial builds the same state with X gates") {
    Rng r1(13), r2(13);
    const auto target = initial_basis_state(InitialState::RandomWeighted, spec, sigma, r1);
    const auto s = prepare_initial(InitialState::RandomWeighted, spec, sigma, r2);
    REQUIRE(std::abs(s.amp[target] - 1.0) < 1e-15);
  }
}

TEST_CASE("pair enumeration follows the ring at each distance") {
  using P = std::pair<int, int>;
  REQUIRE(mixer_pairs(2, 1) == std::vector<P>{{1, 2}});
  REQUIRE(mixer_pairs(3, 1) == std::vector<P>{{1, 2}, {2, 3}, {3, 1}});
  REQUIRE(mixer_pairs(4, 1) == std::vector<P>{{1, 2}, {2, 3}, {3, 4}, {4, 1}});
  REQUIRE(mixer_pairs(4, 2) == std::vector<P>{{1, 3}, {2, 4}});  // opposite pairs deduplicated
  // L = floor(n/2) reaches every unordered pair
  std::set<std::pair<int, int>> all;
  for (int d = 1; d <= 2; ++d)
    for (auto [t, tp] : mixer_pairs(4, d)) all.insert({std::min(t, tp), std::max(t, tp)});
  REQUIRE(all.size() == 6);
}

TEST_CASE("mixer spec validates its range") {
  MixerSpec m{2};
  REQUIRE_THROWS_AS(m.validate(3), std::invalid_argument);
  REQUIRE_NOTHROW(m.validate(4));
}

TEST_CASE("block mixing conserves the budget") {
  Rng rng(6);
  const EncodingSpec spec(3, 2);
  SECTION("beta = 0 is the identity") {
    auto s = Statevector::basis_state(spec.qubits(), 0b001001);
    apply_h_tt(s, spec, 1, 2, 0.0);
    REQUIRE(std::abs(s.amp[0b001001] - 1.0) < 1e-14);
  }
  SECTION("feasible basis states stay inside the feasible set") {
    for (const auto z : enumerate_feasible(spec)) {
      auto s = Statevector::basis_state(spec.qubits(), z);
      apply_h_tt(s, spec, 1, 3, 1.1);
      REQUIRE(infeasible_mass(s, spec) < 1e-10);
      REQUIRE(std::abs(s.norm() - 1.0) < 1e-12);
    }
  }
  SECTION("full mixer rounds conserve the budget at every valid L") {
    const EncodingSpec sp4(4, 2);
    for (int L = 1; L <= 2; ++L) {
      for (const auto z : enumerate_feasible(sp4)) {
        auto s = Statevector::basis_state(sp4.qubits(), z);
        apply_mixer(s, sp4, MixerSpec{L}, 0.9);
        REQUIRE(infeasible_mass(s, sp4) < 1e-10);
      }
    }
  }
}

TEST_CASE("wider mixers reach at least the states of narrow ones") {
  // Interference can null individual amplitudes at a single angle, so the
  // reachable sets are compared as unions over a small angle grid.
  const EncodingSpec spec(4, 2);
  const auto z0 = enumerate_feasible(spec)[3];
  const auto reachable = [&](int L) {
    std::set<std::uint64_t> sup;
    for (double beta : {0.3, 0.8, 1.3}) {
      auto s = Statevector::basis_state(spec.qubits(), z0);
      apply_mixer(s, spec, MixerSpec{L}, beta);
      for (std::uint64_t z = 0; z < s.dim(); ++z)
        if (std::norm(s.amp[z]) > 1e-12) sup.insert(z);
    }
    return sup;
  };
  const auto sup1 = reachable(1);
  const auto sup2 = reachable(2);
  for (auto z : sup1) REQUIRE(sup2.count(z) == 1);
  REQUIRE(sup2.size() >= sup1.size());
}

TEST_CASE("block mixer has support on every exchange and carry generator") {
  // l = 2 between two assets is a 4-qubit operator; project H onto each
  // generator and require a nonzero coefficient (the bridged carry included).
  const EncodingSpec spec(2, 2);
  const double beta = 0.9;
  const int nq = 4;
  const int t1k1 = spec.qubit_index(1, 1), t1k2 = spec.qubit_index(1, 2);
  const int t2k1 = spec.qubit_index(2, 1), t2k2 = spec.qubit_index(2, 2);

  Eigen::MatrixXcd h = Eigen::MatrixXcd::Identity(16, 16);
  const auto lift = [&](const PauliSum& gen) { return dense_exp(beta * gen.to_dense()); };
  // application order: rightmost factor first
  const Eigen::MatrixXcd s_layer =
      lift(s_minus(nq, t2k2, t1k2)) * lift(s_minus(nq, t2k1, t1k1));
  const Eigen::MatrixXcd p_odd = lift(p_minus(nq, t1k2, t1k1, t2k1));
  h = s_layer * p_odd * s_layer;

  // simulator cross-check
  Rng rng(8);
  Statevector s(nq);
  for (auto& a : s.amp) a = cplx(rng.next_normal(), rng.next_normal());
  s.renormalize();
  Eigen::VectorXcd v(16);
  for (int i = 0; i < 16; ++i) v(i) = s.amp[i];
  const Eigen::VectorXcd want = h * v;
  apply_h_tt(s, spec, 1, 2, beta);
  for (int i = 0; i < 16; ++i) REQUIRE(std::abs(s.amp[i] - want(i)) < 1e-12);

  // Each excitation pair may surface as the antisymmetric or the symmetric
  // combination (the bridged carry into asset 2 appears purely on P+), so
  // project onto both and require combined weight.
  const auto weight = [&](const PauliSum& minus, const PauliSum& plus) {
    const auto cm =
        hs_inner(minus.to_dense(), h) / hs_inner(minus.to_dense(), minus.to_dense()).real();
    const auto cp = hs_inner(plus.to_dense(), h) / hs_inner(plus.to_dense(), plus.to_dense()).real();
    return std::abs(cm) + std::abs(cp);
  };
  REQUIRE(weight(s_minus(nq, t2k1, t1k1), s_plus(nq, t2k1, t1k1)) > 1e-6);
  REQUIRE(weight(s_minus(nq, t2k2, t1k2), s_plus(nq, t2k2, t1k2)) > 1e-6);
  REQUIRE(weight(p_minus(nq, t1k2, t1k1, t2k1), p_plus(nq, t1k2, t1k1, t2k1)) > 1e-6);
  REQUIRE(weight(p_minus(nq, t2k2, t1k1, t2k1), p_plus(nq, t2k2, t1k1, t2k1)) > 1e-6);
  // the bridged generator carries exactly sin^2(beta)
  const auto bridged = hs_inner(p_plus(nq, t2k2, t1k1, t2k1).to_dense(), h) /
                       hs_inner(p_plus(nq, t2k2, t1k1, t2k1).to_dense(),
                                p_plus(nq, t2k2, t1k1, t2k1).to_dense())
                           .real();
  REQUIRE(std::abs(bridged - std::sin(beta) * std::sin(beta)) < 1e-10);
}

TEST_CASE("composition rewrite of the block mixer holds on statevectors") {
  // S~ Pe Po S~ equals the parity-regrouped product (S-factors split odd/even
  // over all bit positions, carry factors over valid positions only).
  Rng rng(9);
  for (int l : {2, 3}) {
    const EncodingSpec spec(2, l);
    const int nq = spec.qubits();
    for (double beta : {0.7, 1.9}) {
      Statevector s1(nq);
      for (auto& a : s1.amp) a = cplx(rng.next_normal(), rng.next_normal());
      s1.renormalize();
      auto s2 = s1;

      apply_h_tt(s1, spec, 1, 2, beta);

      const auto s_gate = [&](Statevector& s, int k) {
        apply_two_excitation(s, spec.qubit_index(1, k), spec.qubit_index(2, k), beta);
      };
      const auto p_gate = [&](Statevector& s, int k) {
        apply_three_excitation(s, spec.qubit_index(1, k + 1), spec.qubit_index(1, k),
                               spec.qubit_index(2, k), beta);
      };
      // rightmost factor first: [S even all] [P odd] [S all] [P even] [S odd all]
      for (int k = 2; k <= l; k += 2) s_gate(s2, k);
      for (int k = 1; k < l; k += 2) p_gate(s2, k);
      for (int k = 1; k <= l; ++k) s_gate(s2, k);
      for (int k = 2; k < l; k += 2) p_gate(s2, k);
      for (int k = 1; k <= l; k += 2) s_gate(s2, k);

      for (std::size_t i = 0; i < s1.dim(); ++i)
        REQUIRE(std::abs(s1.amp[i] - s2.amp[i]) < 1e-11);
    }
  }
}

TEST_CASE("full ansatz keeps feasible support and respects trivial limits") {
  Rng rng(10);
  const EncodingSpec spec(3, 2);
  const auto sigma = synthetic_spd(rng, 3);
  const auto model = build_cost_model(spec, sigma);

  AnsatzConfig c;
  c.initial = InitialState::MaxBias;
  c.mixer.L = 1;
  c.seed = 3;

  SECTION("p = 0 leaves the initial state") {
    c.p = 0;
    c.gammas = {};
    c.betas = {};
    Rng r(0);
    const auto s = run_ansatz(c, model, spec, sigma, r);
    Rng r2(0);
    const auto init = initial_basis_state(InitialState::MaxBias, spec, sigma, r2);
    REQUIRE(std::abs(s.amp[init] - 1.0) < 1e-14);
  }
  SECTION("zero angles act as the identity up to global phase") {
    c.p = 2;
    c.gammas = {0.0, 0.0};
    c.betas = {0.0, 0.0};
    Rng r(0);
    const auto s = run_ansatz(c, model, spec, sigma, r);
    Rng r2(0);
    const auto init = initial_basis_state(InitialState::MaxBias, spec, sigma, r2);
    REQUIRE(std::abs(std::abs(s.amp[init]) - 1.0) < 1e-12);
  }
  SECTION("arbitrary parameters keep the state feasible") {
    c.p = 3;
    for (int trial = 0; trial < 10; ++trial) {
      c.gammas = {rng.next_double() * 6.28, rng.next_double() * 6.28, rng.next_double() * 6.28};
      c.betas = {rng.next_double() * 6.28, rng.next_double() * 6.28, rng.next_double() * 6.28};
      Rng r(trial);
      const auto s = run_ansatz(c, model, spec, sigma, r);
      REQUIRE(infeasible_mass(s, spec) < 1e-10);
    }
  }
  SECTION("event-list construction matches the fast path on probabilities") {
    c.p = 2;
    c.gammas = {0.6, 1.2};
    c.betas = {0.9, 0.4};
    Rng r1(5), r2(5);
    const auto fast = run_ansatz(c, model, spec, sigma, r1);
    Statevector walked = Statevector::zero_state(spec.qubits());
    apply_events(walked, ansatz_events(c, model, spec, sigma, r2));
    for (std::size_t i = 0; i < fast.dim(); ++i)
      REQUIRE(std::abs(std::norm(fast.amp[i]) - std::norm(walked.amp[i])) < 1e-11);
  }
}

TEST_CASE("ansatz config serialization round-trips") {
  AnsatzConfig c;
  c.initial = InitialState::WarmStarted;
  c.mixer.L = 2;
  c.p = 2;
  c.gammas = {0.1, 0.2};
  c.betas = {0.3, 0.4};
  c.seed = 99;
  const auto j = ansatz_to_json(c);
  const auto back = ansatz_from_json(j);
  REQUIRE(back.initial == InitialState::WarmStarted);
  REQUIRE(back.mixer.L == 2);
  REQUIRE(back.p == 2);
  REQUIRE(back.gammas == c.gammas);
  REQUIRE(back.betas == c.betas);
  REQUIRE(back.seed == 99);
}

TEST_CASE("parameter vector stacking wraps angles into [0, 2pi)") {
  AnsatzConfig c;
  c.p = 2;
  c.set_params({-0.5, 7.0, 1.0, 2.0});
  REQUIRE(c.gammas[0] == Catch::Approx(2 * M_PI - 0.5));
  REQUIRE(c.gammas[1] == Catch::Approx(7.0 - 2 * M_PI));
  REQUIRE(c.params().size() == 4);
  REQUIRE_THROWS_AS(c.set_params({0.1}), std::invalid_argument);
}
