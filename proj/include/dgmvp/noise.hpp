#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "dgmvp/circuits.hpp"
#include "dgmvp/encoding.hpp"
#include "dgmvp/rng.hpp"
#include "dgmvp/statevector.hpp"

namespace dgmvp {

/// Thermal-relaxation parameters: per-qubit (T1, T2) drawn from normal
/// distributions, resampled until both are positive and T2 <= 2 T1. The bath
/// is cold (no excited-state population). Gate timings come from
/// GateDurations; idle qubits do not decay during other qubits' gates unless
/// idle_decay is set (layer-synchronous decay).
struct NoiseParams {
  double t1_mean = 50e-6;
  double t1_sd = 10e-6;
  double t2_mean = 70e-6;
  double t2_sd = 10e-6;
  GateDurations durations{};
  bool idle_decay = false;
};

struct QubitTimes {
  double t1;
  double t2;
};

inline std::vector<QubitTimes> sample_qubit_times(const NoiseParams& params, int qubits,
                                                  Rng& rng) {
  std::vector<QubitTimes> times(qubits);
  for (auto& qt : times) {
    do {
      qt.t1 = params.t1_mean + params.t1_sd * rng.next_normal();
      qt.t2 = params.t2_mean + params.t2_sd * rng.next_normal();
    } while (!(qt.t1 > 0.0 && qt.t2 > 0.0 && qt.t2 <= 2.0 * qt.t1));
  }
  return times;
}

/// One trajectory step of the thermal-relaxation channel on a single qubit:
/// amplitude-damping jump (reset toward |0>) with probability
/// (1 - e^{-t/T1}) * P(qubit = 1), otherwise the no-jump evolution, followed
/// by a Z flip with probability (1 - e^{-t/Tphi})/2 where
/// 1/Tphi = 1/T2 - 1/(2 T1). Averaged over trajectories this reproduces the
/// analytic channel: populations decay as e^{-t/T1} and coherences as
/// e^{-t/T2}. No random numbers are consumed when the duration is zero, so
/// the zero-duration limit leaves the draw sequence untouched.
inline void apply_relaxation(Statevector& s, int qubit, double duration, double t1, double t2,
                             Rng& rng) {
  if (duration < 0.0) throw std::invalid_argument("apply_relaxation: negative duration");
  if (!(t1 > 0.0) || !(t2 > 0.0) || t2 > 2.0 * t1)
    throw std::invalid_argument("apply_relaxation: need T1 > 0, 0 < T2 <= 2 T1");
  if (duration == 0.0) return;
  s.check_qubit(qubit);

  const std::uint64_t bit = std::uint64_t{1} << qubit;
  const double gamma = 1.0 - std::exp(-duration / t1);
  if (gamma > 0.0) {
    double p1 = 0.0;
    for (std::uint64_t i = 0; i < s.dim(); ++i)
      if (i & bit) p1 += std::norm(s.amp[i]);
    const double p_jump = gamma * p1;
    if (p_jump > 0.0) {
      if (rng.next_double() < p_jump) {
        // jump: |1> amplitude moves to |0>, everything else is projected out
        for (std::uint64_t i = 0; i < s.dim(); ++i) {
          if (i & bit) {
            s.amp[i & ~bit] = s.amp[i];
            s.amp[i] = 0.0;
          }
        }
        s.renormalize();
      } else {
        // no-jump evolution: |1> amplitudes shrink by sqrt(1 - gamma)
        const double k = std::sqrt(1.0 - gamma);
        for (std::uint64_t i = 0; i < s.dim(); ++i)
          if (i & bit) s.amp[i] *= k;
        s.renormalize();
      }
    }
  }

  const double dephase_rate = 1.0 / t2 - 0.5 / t1;
  const double p_phi = 1.0 - std::exp(-duration * dephase_rate);
  if (p_phi > 0.0) {
    if (rng.next_double() < 0.5 * p_phi) {
      for (std::uint64_t i = 0; i < s.dim(); ++i)
        if (i & bit) s.amp[i] = -s.amp[i];
    }
  }
}

struct TrajectoryOutcome {
  std::uint64_t bits = 0;
  bool feasible = false;
};

/// Monte-Carlo trajectory sampler: each shot replays the circuit with
/// relaxation interleaved after every gate on that gate's targets (and on
/// idle qubits too when idle_decay is set), relaxes through the measurement
/// window, then measures. Shot i draws from its own child stream, the same
/// discipline as the noiseless sampler, so zero durations reproduce the
/// noiseless pipeline bit for bit.
inline std::vector<TrajectoryOutcome> noisy_sample_events(
    const std::vector<GateEvent>& events, const EncodingSpec& spec, std::uint64_t shots,
    const NoiseParams& params, const std::vector<QubitTimes>& times, Rng& rng) {
  if (shots < 1) throw std::invalid_argument("noisy_sample_events: shots must be >= 1");
  const int nq = spec.qubits();
  if (static_cast<int>(times.size()) != nq)
    throw std::invalid_argument("noisy_sample_events: qubit-time table size mismatch");

  Rng base = rng.split(rng.next_u64());
  std::vector<TrajectoryOutcome> out(shots);
  for (std::uint64_t shot = 0; shot < shots; ++shot) {
    Rng child = base.split(shot);
    Statevector s = Statevector::zero_state(nq);
    for (const auto& ev : events) {
      apply_event(s, ev);
      if (params.idle_decay) {
        for (int q = 0; q < nq; ++q)
          apply_relaxation(s, q, ev.duration, times[q].t1, times[q].t2, child);
      } else {
        for (int k = 0; k < ev.n_targets; ++k)
          apply_relaxation(s, ev.targets[k], ev.duration, times[ev.targets[k]].t1,
                           times[ev.targets[k]].t2, child);
      }
    }
    for (int q = 0; q < nq; ++q)
      apply_relaxation(s, q, params.durations.measurement, times[q].t1, times[q].t2, child);
    const auto prefix = detail::probability_prefix(s);
    const std::uint64_t z = detail::index_from_uniform(prefix, child.next_double());
    out[shot] = {z, is_feasible(spec, z)};
  }
  return out;
}

/// Convenience overload matching the ansatz surface: draws the per-qubit
/// (T1, T2) ensemble from a child stream, then samples trajectories.
inline std::vector<TrajectoryOutcome> noisy_sample(const AnsatzConfig& config,
                                                   const CostModel& model,
                                                   const EncodingSpec& spec,
                                                   const CovarianceMatrix& sigma,
                                                   std::uint64_t shots, const NoiseParams& params,
                                                   Rng& rng) {
  Rng time_rng = rng.split(0x54494d45);
  const auto times = sample_qubit_times(params, spec.qubits(), time_rng);
  Rng init_rng = Rng(config.seed).split(0x494e4954);
  const auto events = ansatz_events(config, model, spec, sigma, init_rng, params.durations);
  return noisy_sample_events(events, spec, shots, params, times, rng);
}

struct PostSelection {
  std::vector<TrajectoryOutcome> kept;
  double p_ps = 0.0;  // kept / total; undefined estimate when kept is empty
};

/// Keep only budget-feasible outcomes. An empty kept set signals that every
/// shot was filtered; the caller decides how to proceed.
inline PostSelection post_select(const std::vector<TrajectoryOutcome>& outcomes) {
  if (outcomes.empty()) throw std::invalid_argument("post_select: no outcomes");
  PostSelection ps;
  for (const auto& o : outcomes)
    if (o.feasible) ps.kept.push_back(o);
  ps.p_ps = static_cast<double>(ps.kept.size()) / static_cast<double>(outcomes.size());
  return ps;
}

/// Noiseless counterpart of noisy_sample_events_: same gate walk, same
/// per-shot stream discipline, no relaxation. Used where the zero-duration
/// equivalence must hold bit for bit.
inline std::vector<TrajectoryOutcome> sample_events_noiseless(const std::vector<GateEvent>& events,
                                                              const EncodingSpec& spec,
                                                              std::uint64_t shots, Rng& rng) {
  Statevector s = Statevector::zero_state(spec.qubits());
  apply_events(s, events);
  Rng base = rng.split(rng.next_u64());
  const auto prefix = detail::probability_prefix(s);
  std::vector<TrajectoryOutcome> out(shots);
  for (std::uint64_t shot = 0; shot < shots; ++shot) {
    Rng child = base.split(shot);
    const std::uint64_t z = detail::index_from_uniform(prefix, child.next_double());
    out[shot] = {z, is_feasible(spec, z)};
  }
  return out;
}

}  // namespace dgmvp
