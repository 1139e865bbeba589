#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "dgmvp/encoding.hpp"
#include "dgmvp/hamiltonian.hpp"
#include "dgmvp/market_data.hpp"
#include "dgmvp/rng.hpp"
#include "dgmvp/statevector.hpp"

namespace dgmvp {

enum class InitialState { MaxBias, WarmStarted, EqualWeighted, RandomWeighted };

inline std::string to_string(InitialState k) {
  switch (k) {
    case InitialState::MaxBias: return "maxbias";
    case InitialState::WarmStarted: return "warm_started";
    case InitialState::EqualWeighted: return "equal_weighted";
    case InitialState::RandomWeighted: return "random_weighted";
  }
  return "?";
}

inline InitialState initial_state_from_string(const std::string& s) {
  if (s == "maxbias") return InitialState::MaxBias;
  if (s == "warm_started") return InitialState::WarmStarted;
  if (s == "equal_weighted") return InitialState::EqualWeighted;
  if (s == "random_weighted") return InitialState::RandomWeighted;
  throw std::invalid_argument("unknown initial state: " + s);
}

/// Maximum asset distance covered by the mixing operator, 1 <= L <= floor(n/2).
struct MixerSpec {
  int L = 1;
  void validate(int n) const {
    if (L < 1 || L > std::max(1, n / 2))
      throw std::invalid_argument("MixerSpec: L must satisfy 1 <= L <= floor(n/2)");
  }
};

/// One ansatz instance: initial state, mixer reach, layer count and the
/// parameter vector (gamma_1..gamma_p, beta_1..beta_p). The seed pins the
/// random-weighted initial state and is the unit of reproducibility.
struct AnsatzConfig {
  InitialState initial = InitialState::MaxBias;
  MixerSpec mixer{1};
  int p = 1;
  std::vector<double> gammas;
  std::vector<double> betas;
  std::uint64_t seed = 0;

  static double wrap_angle(double x) {
    constexpr double two_pi = 6.283185307179586476925286766559;
    x = std::fmod(x, two_pi);
    if (x < 0) x += two_pi;
    return x;
  }

  void set_params(const std::vector<double>& params) {
    if (static_cast<int>(params.size()) != 2 * p)
      throw std::invalid_argument("AnsatzConfig: params length must be 2p");
    gammas.assign(params.begin(), params.begin() + p);
    betas.assign(params.begin() + p, params.end());
    for (auto& g : gammas) g = wrap_angle(g);
    for (auto& b : betas) b = wrap_angle(b);
  }

  std::vector<double> params() const {
    std::vector<double> out = gammas;
    out.insert(out.end(), betas.begin(), betas.end());
    return out;
  }
};

inline nlohmann::json ansatz_to_json(const AnsatzConfig& c) {
  return nlohmann::json{{"initial", to_string(c.initial)}, {"L", c.mixer.L},   {"p", c.p},
                        {"gammas", c.gammas},              {"betas", c.betas}, {"seed", c.seed}};
}

inline AnsatzConfig ansatz_from_json(const nlohmann::json& j) {
  AnsatzConfig c;
  c.initial = initial_state_from_string(j.at("initial").get<std::string>());
  c.mixer.L = j.at("L").get<int>();
  c.p = j.at("p").get<int>();
  c.gammas = j.at("gammas").get<std::vector<double>>();
  c.betas = j.at("betas").get<std::vector<double>>();
  c.seed = j.at("seed").get<std::uint64_t>();
  if (static_cast<int>(c.gammas.size()) != c.p || static_cast<int>(c.betas.size()) != c.p)
    throw std::invalid_argument("ansatz_from_json: parameter length mismatch");
  return c;
}

// ---------------------------------------------------------------------------
// Classical GMVP solve and the ranked warm start.
// ---------------------------------------------------------------------------

/// Continuous minimum-variance weights: minimize w' Sigma w subject to
/// sum w = 1 and w >= 0. The closed form Sigma^{-1} 1 / (1' Sigma^{-1} 1) is
/// used when already nonnegative; otherwise negative weights are clamped to
/// zero and the reduced system resolved (active-set iteration). A small ridge
/// is added if Sigma is numerically singular.
inline Eigen::VectorXd gmvp_continuous(const CovarianceMatrix& cov) {
  const int n = cov.dim();
  Eigen::MatrixXd sigma = cov.sigma;
  const double ridge_scale = std::max(sigma.trace(), 1.0);
  bool ridged = false;
  std::vector<int> active(n);
  std::iota(active.begin(), active.end(), 0);

  for (int round = 0; round <= n; ++round) {
    const int m = static_cast<int>(active.size());
    if (m == 0) throw std::runtime_error("gmvp_continuous: active set collapsed");
    Eigen::MatrixXd sub(m, m);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) sub(i, j) = sigma(active[i], active[j]);
    Eigen::VectorXd ones = Eigen::VectorXd::Ones(m);
    Eigen::LDLT<Eigen::MatrixXd> ldlt(sub);
    Eigen::VectorXd y;
    if (ldlt.info() == Eigen::Success) {
      y = ldlt.solve(ones);
    }
    if (ldlt.info() != Eigen::Success || !y.allFinite() ||
        std::abs(ones.dot(y)) < 1e-300) {
      if (ridged) throw std::runtime_error("gmvp_continuous: singular covariance");
      sigma += 1e-10 * ridge_scale * Eigen::MatrixXd::Identity(n, n);
      ridged = true;
      --round;
      continue;
    }
    y /= ones.dot(y);
    if (y.minCoeff() >= -1e-12) {
      Eigen::VectorXd w = Eigen::VectorXd::Zero(n);
      for (int i = 0; i < m; ++i) w(active[i]) = std::max(y(i), 0.0);
      w /= w.sum();
      return w;
    }
    // Clamp negatives and re-solve on the support.
    std::vector<int> next;
    for (int i = 0; i < m; ++i)
      if (y(i) > 0) next.push_back(active[i]);
    if (next.empty()) {
      // keep the least-negative coordinate to make progress
      int best = 0;
      for (int i = 1; i < m; ++i)
        if (y(i) > y(best)) best = i;
      next.push_back(active[best]);
    }
    active = std::move(next);
  }
  throw std::runtime_error("gmvp_continuous: active-set iteration did not converge");
}

/// Round the continuous weights to the lot grid: keep floor(w_i/a) lots per
/// asset, rank remainders descending and hand the remaining budget out one
/// lot at a time. Ties break toward the lower asset index (stable sort).
inline std::uint64_t warm_start_round(const EncodingSpec& spec, const Eigen::VectorXd& w_tilde) {
  if (w_tilde.size() != spec.n) throw std::invalid_argument("warm_start_round: length mismatch");
  const double d = static_cast<double>(spec.max_lots());
  LotVector lots(spec.n);
  std::vector<double> remainders(spec.n);
  std::int64_t assigned = 0;
  for (int i = 0; i < spec.n; ++i) {
    double v = w_tilde(i) * d;
    const double snapped = std::round(v);
    if (std::abs(v - snapped) < 1e-9) v = snapped;  // grid-aligned inputs stay exact
    double z = std::floor(v);
    z = std::clamp(z, 0.0, d);
    lots[i] = static_cast<std::int64_t>(z);
    remainders[i] = v - z;
    assigned += lots[i];
  }
  std::int64_t budget = spec.max_lots() - assigned;
  std::vector<int> order(spec.n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return remainders[a] > remainders[b]; });
  for (int idx = 0; budget > 0; idx = (idx + 1) % spec.n) {
    const int i = order[idx];
    if (lots[i] < spec.max_lots()) {
      ++lots[i];
      --budget;
    }
  }
  for (int idx = 0; budget < 0; idx = (idx + 1) % spec.n) {
    const int i = order[spec.n - 1 - idx % spec.n];
    if (lots[i] > 0) {
      --lots[i];
      ++budget;
    }
  }
  return encode(spec, lots).word;
}

/// Basis state prepared by each initial-state recipe. Every variant lands in
/// the feasible set by construction.
inline std::uint64_t initial_basis_state(InitialState kind, const EncodingSpec& spec,
                                         const CovarianceMatrix& sigma, Rng& rng) {
  std::uint64_t state = 0;
  switch (kind) {
    case InitialState::MaxBias: {
      // All-in on asset 1: its block is all ones.
      LotVector lots(spec.n, 0);
      lots[0] = spec.max_lots();
      state = encode(spec, lots).word;
      break;
    }
    case InitialState::WarmStarted:
      state = warm_start_round(spec, gmvp_continuous(sigma));
      break;
    case InitialState::EqualWeighted: {
      // z-hat = floor(D/n) lots each; the leftover D - n*z-hat lots go one
      // each to the first assets. Exact integer arithmetic throughout.
      const std::int64_t d = spec.max_lots();
      const std::int64_t zhat = d / spec.n;
      const std::int64_t extra = d - zhat * spec.n;
      LotVector lots(spec.n, zhat);
      for (std::int64_t i = 0; i < extra; ++i) ++lots[static_cast<std::size_t>(i)];
      state = encode(spec, lots).word;
      break;
    }
    case InitialState::RandomWeighted:
      state = sample_feasible_uniform(spec, rng);
      break;
  }
  if (!is_feasible(spec, state))
    throw std::logic_error("initial_basis_state: constructed state violates the budget");
  return state;
}

/// X gates that prepare `state` from the zero register.
inline std::vector<GateEvent> initial_state_events(std::uint64_t state, int nq,
                                                   const GateDurations& dur = {}) {
  std::vector<GateEvent> events;
  for (int q = 0; q < nq; ++q) {
    if ((state >> q) & 1) {
      GateEvent ev;
      ev.kind = GateEvent::Kind::PauliX;
      ev.targets = {q, -1, -1};
      ev.n_targets = 1;
      ev.duration = dur.single_qubit;
      events.push_back(ev);
    }
  }
  return events;
}

// ---------------------------------------------------------------------------
// Hard mixer: H_tt' and M_L.
// ---------------------------------------------------------------------------

namespace detail {
inline GateEvent two_exc_event(int qa, int qb, double beta, const GateDurations& dur) {
  GateEvent ev;
  ev.kind = GateEvent::Kind::TwoExcitation;
  ev.targets = {qa, qb, -1};
  ev.n_targets = 2;
  ev.angle = beta;
  ev.duration = dur.two_excitation;
  return ev;
}
inline GateEvent three_exc_event(int q_hi, int q_b, int q_c, double beta,
                                 const GateDurations& dur) {
  GateEvent ev;
  ev.kind = GateEvent::Kind::ThreeExcitation;
  ev.targets = {q_hi, q_b, q_c};
  ev.n_targets = 3;
  ev.angle = beta;
  ev.duration = dur.three_excitation;
  return ev;
}
}  // namespace detail

/// Gate events of H_tt'(beta) = S~(beta) Pe(beta) Po(beta) S~(beta), emitted
/// in application order (rightmost factor first). S~ exchanges every bit
/// position between the blocks; the carry/borrow layers split the valid
/// positions k = 1..l-1 by parity so that each layer acts on disjoint qubits
/// (the k = l element the index formula produces has no k+1 bit and drops
/// out).
inline std::vector<GateEvent> h_tt_events(const EncodingSpec& spec, int t, int t_prime,
                                          double beta, const GateDurations& dur = {}) {
  if (t < 1 || t > spec.n || t_prime < 1 || t_prime > spec.n || t == t_prime)
    throw std::invalid_argument("h_tt_events: bad asset pair");
  std::vector<GateEvent> events;
  const auto exchange_layer = [&]() {
    for (int k = 1; k <= spec.l; ++k)
      events.push_back(detail::two_exc_event(spec.qubit_index(t, k), spec.qubit_index(t_prime, k),
                                             beta, dur));
  };
  const auto carry_layer = [&](int parity) {
    for (int k = 1; k < spec.l; ++k)
      if (k % 2 == parity)
        events.push_back(detail::three_exc_event(spec.qubit_index(t, k + 1),
                                                 spec.qubit_index(t, k),
                                                 spec.qubit_index(t_prime, k), beta, dur));
  };
  exchange_layer();   // rightmost S~
  carry_layer(1);     // Po: odd k
  carry_layer(0);     // Pe: even k
  exchange_layer();   // leftmost S~
  return events;
}

inline void apply_h_tt(Statevector& s, const EncodingSpec& spec, int t, int t_prime, double beta) {
  for (const auto& ev : h_tt_events(spec, t, t_prime, beta)) apply_event(s, ev);
}

/// Unordered asset pairs at ring distance d, visited once each, t ascending.
/// For n = 2d both orientations coincide and the pair is kept once.
inline std::vector<std::pair<int, int>> mixer_pairs(int n, int distance) {
  std::vector<std::pair<int, int>> pairs;
  std::vector<std::vector<bool>> seen(n + 1, std::vector<bool>(n + 1, false));
  for (int t = 1; t <= n; ++t) {
    const int tp = (t - 1 + distance) % n + 1;
    if (tp == t) continue;
    const int a = std::min(t, tp), b = std::max(t, tp);
    if (seen[a][b]) continue;
    seen[a][b] = true;
    pairs.emplace_back(t, tp);
  }
  return pairs;
}

/// M_L(beta): the product of H_tt'(beta) over distances d = 1..L. One beta is
/// shared by every block within the layer.
inline std::vector<GateEvent> mixer_events(const EncodingSpec& spec, const MixerSpec& mixer,
                                           double beta, const GateDurations& dur = {}) {
  mixer.validate(spec.n);
  std::vector<GateEvent> events;
  for (int d = 1; d <= mixer.L; ++d) {
    for (const auto& [t, tp] : mixer_pairs(spec.n, d)) {
      const auto h = h_tt_events(spec, t, tp, beta, dur);
      events.insert(events.end(), h.begin(), h.end());
    }
  }
  return events;
}

inline void apply_mixer(Statevector& s, const EncodingSpec& spec, const MixerSpec& mixer,
                        double beta) {
  for (const auto& ev : mixer_events(spec, mixer, beta)) apply_event(s, ev);
}

// ---------------------------------------------------------------------------
// Full ansatz.
// ---------------------------------------------------------------------------

/// Prepare the configured initial state on a zero register.
inline Statevector prepare_initial(InitialState kind, const EncodingSpec& spec,
                                   const CovarianceMatrix& sigma, Rng& rng) {
  Statevector s = Statevector::zero_state(spec.qubits());
  const std::uint64_t target = initial_basis_state(kind, spec, sigma, rng);
  for (const auto& ev : initial_state_events(target, spec.qubits())) apply_event(s, ev);
  return s;
}

/// |gamma, beta> = M(beta_p) U(C, gamma_p) ... M(beta_1) U(C, gamma_1) |init>,
/// with the cost layer applied as a diagonal phase multiply. `rng` feeds only
/// the random-weighted initial state.
inline Statevector run_ansatz(const AnsatzConfig& config, const CostModel& model,
                              const EncodingSpec& spec, const CovarianceMatrix& sigma, Rng& rng) {
  if (static_cast<int>(config.gammas.size()) != config.p ||
      static_cast<int>(config.betas.size()) != config.p)
    throw std::invalid_argument("run_ansatz: parameter vector length must be 2p");
  config.mixer.validate(spec.n);
  Statevector s = prepare_initial(config.initial, spec, sigma, rng);
  for (int layer = 0; layer < config.p; ++layer) {
    apply_cost_operator(s, model, config.gammas[layer]);
    apply_mixer(s, spec, config.mixer, config.betas[layer]);
  }
  return s;
}

/// The same circuit as an explicit gate-event list (X preparation, RZ/RZZ
/// cost gates, excitation blocks); the trajectory sampler walks this.
inline std::vector<GateEvent> ansatz_events(const AnsatzConfig& config, const CostModel& model,
                                            const EncodingSpec& spec,
                                            const CovarianceMatrix& sigma, Rng& rng,
                                            const GateDurations& dur = {}) {
  config.mixer.validate(spec.n);
  const std::uint64_t init = initial_basis_state(config.initial, spec, sigma, rng);
  std::vector<GateEvent> events = initial_state_events(init, spec.qubits(), dur);
  for (int layer = 0; layer < config.p; ++layer) {
    const auto cost = cost_gate_events(model, config.gammas[layer], dur);
    events.insert(events.end(), cost.begin(), cost.end());
    const auto mix = mixer_events(spec, config.mixer, config.betas[layer], dur);
    events.insert(events.end(), mix.begin(), mix.end());
  }
  return events;
}

/// Total probability mass outside the feasible set; the hard-mixer pipeline
/// keeps this below 1e-10 for feasible-supported inputs.
inline double infeasible_mass(const Statevector& s, const EncodingSpec& spec) {
  double mass = 0.0;
  for (std::uint64_t z = 0; z < s.dim(); ++z)
    if (!is_feasible(spec, z)) mass += std::norm(s.amp[z]);
  return mass;
}

}  // namespace dgmvp
