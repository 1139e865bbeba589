#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>

#include "dgmvp/market_data.hpp"
#include "dgmvp/metrics.hpp"
#include "dgmvp/noise.hpp"

using namespace dgmvp;

TEST_CASE("qubit time sampling honors the constraints") {
  NoiseParams params;
  Rng rng(1);
  SECTION("zero spread reproduces the means") {
    NoiseParams exact = params;
    exact.t1_sd = 0.0;
    exact.t2_sd = 0.0;
    const auto times = sample_qubit_times(exact, 4, rng);
    for (const auto& qt : times) {
      REQUIRE(qt.t1 == 50e-6);
      REQUIRE(qt.t2 == 70e-6);
    }
  }
  SECTION("draws satisfy T2 <= 2 T1 and stay near the nominal means") {
    double m1 = 0, m2 = 0;
    const int n = 10000;
    const auto times = sample_qubit_times(params, n, rng);
    for (const auto& qt : times) {
      REQUIRE(qt.t1 > 0);
      REQUIRE(qt.t2 > 0);
      REQUIRE(qt.t2 <= 2 * qt.t1);
      m1 += qt.t1;
      m2 += qt.t2;
    }
    m1 /= n;
    m2 /= n;
    // the T2 <= 2 T1 resampling shifts the means by ~1.6us / -0.8us; well
    // within 3 sigma of the sampled distribution
    REQUIRE(std::abs(m1 - 50e-6) < 3e-6);
    REQUIRE(std::abs(m2 - 70e-6) < 3e-6);
  }
  SECTION("same stream, same draws") {
    Rng r1(5), r2(5);
    const auto a = sample_qubit_times(params, 8, r1);
    const auto b = sample_qubit_times(params, 8, r2);
    for (int i = 0; i < 8; ++i) {
      REQUIRE(a[i].t1 == b[i].t1);
      REQUIRE(a[i].t2 == b[i].t2);
    }
  }
}

TEST_CASE("single-qubit relaxation channel") {
  const double t1 = 50e-6, t2 = 70e-6;
  SECTION("zero duration is the identity and consumes no randomness") {
    auto s = Statevector::basis_state(1, 1);
    Rng r(2);
    Rng untouched = r;
    apply_relaxation(s, 0, 0.0, t1, t2, r);
    REQUIRE(std::abs(s.amp[1] - 1.0) < 1e-15);
    REQUIRE(r.next_u64() == untouched.next_u64());
  }
  SECTION("long durations decay the excited state") {
    Rng rng(3);
    int zeros = 0;
    const int trials = 300;
    for (int t = 0; t < trials; ++t) {
      auto s = Statevector::basis_state(1, 1);
      Rng child = rng.split(t);
      apply_relaxation(s, 0, 20 * t1, t1, t2, child);
      if (std::norm(s.amp[0]) > 0.99) ++zeros;
    }
    REQUIRE(zeros == trials);  // e^{-20} leaves nothing
  }
  SECTION("invalid T1/T2 rejected") {
    auto s = Statevector::zero_state(1);
    Rng rng(4);
    REQUIRE_THROWS_AS(apply_relaxation(s, 0, 1e-6, 50e-6, 120e-6, rng), std::invalid_argument);
    REQUIRE_THROWS_AS(apply_relaxation(s, 0, 1e-6, -1.0, 1e-6, rng), std::invalid_argument);
  }
  SECTION("trajectory average reproduces the analytic density matrix") {
    // |+> held for t = T2: population of |1> decays by e^{-t/T1}, coherence
    // by e^{-t/T2} (here e^{-1}/2).
    Rng rng(5);
    const double duration = t2;
    const int trials = 100000;
    double pop1 = 0.0;
    cplx coh = 0.0;
    for (int t = 0; t < trials; ++t) {
      Statevector s(1);
      s.amp[0] = std::sqrt(0.5);
      s.amp[1] = std::sqrt(0.5);
      Rng child = rng.split(t);
      apply_relaxation(s, 0, duration, t1, t2, child);
      pop1 += std::norm(s.amp[1]);
      coh += s.amp[0] * std::conj(s.amp[1]);
    }
    pop1 /= trials;
    coh /= static_cast<double>(trials);
    const double expect_pop = 0.5 * std::exp(-duration / t1);
    const double expect_coh = 0.5 * std::exp(-duration / t2);
    REQUIRE(std::abs(pop1 - expect_pop) < 0.01);
    REQUIRE(std::abs(std::abs(coh) - expect_coh) / expect_coh < 0.02);
  }
}

namespace {
struct NoiseFixture {
  EncodingSpec spec{2, 2};
  CovarianceMatrix sigma;
  CostModel model;
  InstanceGroundTruth truth;
  AnsatzConfig config;

  NoiseFixture() {
    Rng rng(7);
    sigma = synthetic_spd(rng, 2);
    model = build_cost_model(spec, sigma);
    truth = ground_truth(spec, model);
    config.initial = InitialState::MaxBias;
    config.mixer.L = 1;
    config.p = 2;
    config.gammas = {0.8, 0.3};
    config.betas = {0.6, 1.1};
    config.seed = 17;
  }
};
}  // namespace

TEST_CASE("zero durations reproduce the noiseless pipeline bit for bit") {
  NoiseFixture fx;
  NoiseParams off;
  off.durations = GateDurations{0.0, 0.0, 0.0, 0.0, 0.0};

  Rng init1(0x11), init2(0x11);
  const auto events1 =
      ansatz_events(fx.config, fx.model, fx.spec, fx.sigma, init1, off.durations);
  const auto events2 =
      ansatz_events(fx.config, fx.model, fx.spec, fx.sigma, init2, off.durations);

  Rng times_rng(9);
  const auto times = sample_qubit_times(off, fx.spec.qubits(), times_rng);
  Rng r1(77), r2(77);
  const auto noisy = noisy_sample_events(events1, fx.spec, 4096, off, times, r1);
  const auto clean = sample_events_noiseless(events2, fx.spec, 4096, r2);
  REQUIRE(noisy.size() == clean.size());
  for (std::size_t i = 0; i < noisy.size(); ++i) {
    REQUIRE(noisy[i].bits == clean[i].bits);
    REQUIRE(noisy[i].feasible == clean[i].feasible);
  }
}

TEST_CASE("zero-duration outcomes match the noiseless distribution statistically") {
  NoiseFixture fx;
  NoiseParams off;
  off.durations = GateDurations{0.0, 0.0, 0.0, 0.0, 0.0};
  Rng init(0x11);
  const auto events = ansatz_events(fx.config, fx.model, fx.spec, fx.sigma, init, off.durations);
  Rng times_rng(9);
  const auto times = sample_qubit_times(off, fx.spec.qubits(), times_rng);
  Rng r(123);
  const std::uint64_t shots = 20000;
  const auto outcomes = noisy_sample_events(events, fx.spec, shots, off, times, r);

  Statevector s = Statevector::zero_state(fx.spec.qubits());
  apply_events(s, events);
  double chi2 = 0.0;
  std::vector<double> counts(s.dim(), 0.0);
  for (const auto& o : outcomes) counts[o.bits] += 1.0;
  for (std::uint64_t z = 0; z < s.dim(); ++z) {
    const double expect = std::norm(s.amp[z]) * static_cast<double>(shots);
    if (expect > 1.0) chi2 += (counts[z] - expect) * (counts[z] - expect) / expect;
  }
  REQUIRE(chi2 < 30.578);  // 99th percentile at <= 15 dof
}

TEST_CASE("noise leaks probability out of the feasible set as depth grows") {
  NoiseFixture fx;
  NoiseParams on;  // default durations
  Rng times_rng(19);
  const auto times = sample_qubit_times(on, fx.spec.qubits(), times_rng);

  double prev_feasible = 1.1;
  for (int p : {1, 4}) {
    AnsatzConfig c = fx.config;
    c.p = p;
    c.gammas.assign(p, 0.8);
    c.betas.assign(p, 0.6);
    Rng init(0x11);
    const auto events = ansatz_events(c, fx.model, fx.spec, fx.sigma, init, on.durations);
    Rng r(31 + p);
    const auto outcomes = noisy_sample_events(events, fx.spec, 3000, on, times, r);
    const auto ps = post_select(outcomes);
    REQUIRE(ps.p_ps < 1.0);
    REQUIRE(ps.p_ps > 0.0);
    REQUIRE(ps.p_ps < prev_feasible);
    prev_feasible = ps.p_ps;
  }
}

TEST_CASE("post-selection splits outcomes and reports the kept fraction") {
  SECTION("all feasible") {
    std::vector<TrajectoryOutcome> outcomes(5, TrajectoryOutcome{0b0101, true});
    const auto ps = post_select(outcomes);
    REQUIRE(ps.p_ps == 1.0);
    REQUIRE(ps.kept.size() == 5);
  }
  SECTION("none feasible leaves an empty kept set") {
    std::vector<TrajectoryOutcome> outcomes(4, TrajectoryOutcome{0, false});
    const auto ps = post_select(outcomes);
    REQUIRE(ps.kept.empty());
    REQUIRE(ps.p_ps == 0.0);
  }
  SECTION("three of eight") {
    std::vector<TrajectoryOutcome> outcomes;
    for (int i = 0; i < 8; ++i) outcomes.push_back({0, i < 3});
    REQUIRE(post_select(outcomes).p_ps == Catch::Approx(0.375));
  }
  SECTION("empty input rejected") {
    REQUIRE_THROWS_AS(post_select({}), std::invalid_argument);
  }
}

TEST_CASE("post-selection is a no-op on noiseless hard-mixer output") {
  NoiseFixture fx;
  NoiseParams off;
  off.durations = GateDurations{0.0, 0.0, 0.0, 0.0, 0.0};
  Rng init(0x11);
  const auto events = ansatz_events(fx.config, fx.model, fx.spec, fx.sigma, init, off.durations);
  Rng times_rng(9);
  const auto times = sample_qubit_times(off, fx.spec.qubits(), times_rng);
  Rng r(55);
  const auto outcomes = noisy_sample_events(events, fx.spec, 2000, off, times, r);
  const auto ps = post_select(outcomes);
  REQUIRE(ps.p_ps == 1.0);
  // estimates over kept and unfiltered pools coincide
  const auto& table = fx.model.cost_table();
  double mean_all = 0, mean_kept = 0;
  for (const auto& o : outcomes) mean_all += table[o.bits];
  for (const auto& o : ps.kept) mean_kept += table[o.bits];
  REQUIRE(mean_all / outcomes.size() == mean_kept / ps.kept.size());
}

TEST_CASE("trajectory outcomes flag feasibility correctly") {
  NoiseFixture fx;
  NoiseParams on;
  Rng times_rng(19);
  const auto times = sample_qubit_times(on, fx.spec.qubits(), times_rng);
  Rng init(0x11);
  const auto events = ansatz_events(fx.config, fx.model, fx.spec, fx.sigma, init, on.durations);
  Rng r(43);
  for (const auto& o : noisy_sample_events(events, fx.spec, 500, on, times, r))
    REQUIRE(o.feasible == is_feasible(fx.spec, o.bits));
}

TEST_CASE("noisy_sample wrapper is deterministic in the seed") {
  NoiseFixture fx;
  NoiseParams on;
  Rng r1(7), r2(7);
  const auto a = noisy_sample(fx.config, fx.model, fx.spec, fx.sigma, 200, on, r1);
  const auto b = noisy_sample(fx.config, fx.model, fx.spec, fx.sigma, 200, on, r2);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) REQUIRE(a[i].bits == b[i].bits);
}
