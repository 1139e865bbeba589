#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "dgmvp/circuits.hpp"
#include "dgmvp/rng.hpp"

namespace dgmvp {

struct BudgetExceededError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Shot accounting: N_m shots per expectation estimate, a soft cap I on the
/// number of estimations, and N_M post-optimization shots. The cap is soft in
/// that a local-search iteration already underway may finish, so the counter
/// can overshoot by at most one iteration's evaluations.
struct ShotBudget {
  std::uint64_t shots_per_estimate = 16;   // N_m
  std::uint64_t estimation_cap = 2000;     // I
  std::uint64_t post_shots = 65536;        // N_M
  std::uint64_t estimations_used = 0;
  std::uint64_t function_accesses = 0;     // N_f

  bool can_spend() const { return estimations_used < estimation_cap; }
  void charge() {
    ++estimations_used;
    function_accesses += shots_per_estimate;
  }
};

/// Sampled expectation of the cost Hamiltonian for one parameter setting.
/// Pure measurement: no budget bookkeeping.
inline double sampled_expectation(const AnsatzConfig& config, const CostModel& model,
                                  const EncodingSpec& spec, const CovarianceMatrix& sigma,
                                  std::uint64_t shots, Rng& rng) {
  Rng init_rng = Rng(config.seed).split(0x494e4954);  // pins the random-weighted choice
  Statevector s = run_ansatz(config, model, spec, sigma, init_rng);
  const auto samples = sample(s, shots, rng);
  const auto& table = model.cost_table();
  double mean = 0.0;
  for (auto z : samples) mean += table[z];
  return mean / static_cast<double>(samples.size());
}

/// One shot-budgeted objective evaluation (a single "function access" batch):
/// runs the ansatz, draws N_m samples, charges the budget. Throws once the
/// cap is already spent; optimization drivers check the cap themselves at
/// iteration boundaries instead.
inline double estimate_expectation(const AnsatzConfig& config, const CostModel& model,
                                   const EncodingSpec& spec, const CovarianceMatrix& sigma,
                                   ShotBudget& budget, Rng& rng) {
  if (!budget.can_spend())
    throw BudgetExceededError("estimate_expectation: estimation cap exhausted");
  const double v =
      sampled_expectation(config, model, spec, sigma, budget.shots_per_estimate, rng);
  budget.charge();
  return v;
}

struct TraceEntry {
  std::vector<double> params;
  double estimate = 0.0;
  std::uint64_t shots = 0;
  std::uint64_t cumulative_accesses = 0;
};

enum class StopReason { Converged, BudgetExhausted, MaxIterations };

inline std::string to_string(StopReason r) {
  switch (r) {
    case StopReason::Converged: return "converged";
    case StopReason::BudgetExhausted: return "budget";
    case StopReason::MaxIterations: return "max_iterations";
  }
  return "?";
}

struct OptResult {
  std::vector<double> best_params;
  double best_estimate = std::numeric_limits<double>::infinity();
  std::vector<TraceEntry> trace;
  std::uint64_t seed = 0;
  StopReason stop = StopReason::Converged;
  std::vector<OptResult> stages;  // populated by the layerwise driver
};

/// Streams a trace as CSV rows: eval_index, params..., estimate, cumulative N_f.
inline void trace_to_csv(const OptResult& r, std::ostream& os) {
  std::size_t dim = 0;
  for (const auto& e : r.trace) dim = std::max(dim, e.params.size());
  os << "eval_index";
  for (std::size_t i = 0; i < dim; ++i) os << ",param" << i + 1;
  os << ",estimate,cumulative_n_f\n";
  char buf[64];
  const auto put = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    os << buf;
  };
  for (std::size_t i = 0; i < r.trace.size(); ++i) {
    os << i;
    for (std::size_t d = 0; d < dim; ++d) {
      os << ",";
      if (d < r.trace[i].params.size()) put(r.trace[i].params[d]);
    }
    os << ",";
    put(r.trace[i].estimate);
    os << "," << r.trace[i].cumulative_accesses << "\n";
  }
}

using Objective = std::function<double(const std::vector<double>&)>;

/// Wraps a raw objective with budget charging, trace recording and best-seen
/// tracking. All optimization drivers evaluate through this.
class ObjectiveRecorder {
 public:
  ObjectiveRecorder(Objective fn, ShotBudget& budget, OptResult& result)
      : fn_(std::move(fn)), budget_(budget), result_(result) {}

  double operator()(const std::vector<double>& x) {
    const double v = fn_(x);
    budget_.charge();
    result_.trace.push_back({x, v, budget_.shots_per_estimate, budget_.function_accesses});
    if (v < result_.best_estimate) {
      result_.best_estimate = v;
      result_.best_params = x;
    }
    return v;
  }

  bool can_spend() const { return budget_.can_spend(); }

 private:
  Objective fn_;
  ShotBudget& budget_;
  OptResult& result_;
};

struct Bounds {
  std::vector<double> lower;
  std::vector<double> upper;

  static Bounds angle_box(std::size_t dim) {
    constexpr double two_pi = 6.283185307179586476925286766559;
    return Bounds{std::vector<double>(dim, 0.0), std::vector<double>(dim, two_pi)};
  }

  std::size_t dim() const { return lower.size(); }
  std::vector<double> clip(std::vector<double> x) const {
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::clamp(x[i], lower[i], upper[i]);
    return x;
  }
  std::vector<double> random_point(Rng& rng) const {
    std::vector<double> x(dim());
    for (std::size_t i = 0; i < dim(); ++i)
      x[i] = lower[i] + (upper[i] - lower[i]) * rng.next_double();
    return x;
  }
};

// ---------------------------------------------------------------------------
// Nelder-Mead, bounded by clipping. Serves as the local-search phase of dual
// annealing; its evaluations are charged to the same budget.
// ---------------------------------------------------------------------------

struct NelderMeadOptions {
  int max_iterations = 200;
  double xatol = 1e-8;
  double fatol = 1e-8;
};

inline std::pair<double, std::vector<double>> nelder_mead(ObjectiveRecorder& objective,
                                                          const std::vector<double>& x0,
                                                          const Bounds& bounds,
                                                          const NelderMeadOptions& opts = {}) {
  const std::size_t n = x0.size();
  std::vector<std::vector<double>> pts;
  std::vector<double> vals;
  pts.push_back(bounds.clip(x0));
  for (std::size_t i = 0; i < n; ++i) {
    auto p = x0;
    const double span = bounds.upper[i] - bounds.lower[i];
    p[i] += (p[i] + 0.05 * span <= bounds.upper[i]) ? 0.05 * span : -0.05 * span;
    pts.push_back(bounds.clip(p));
  }
  for (const auto& p : pts) vals.push_back(objective(p));

  const auto order = [&]() {
    std::vector<std::size_t> idx(pts.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return vals[a] < vals[b]; });
    std::vector<std::vector<double>> p2;
    std::vector<double> v2;
    for (auto i : idx) {
      p2.push_back(pts[i]);
      v2.push_back(vals[i]);
    }
    pts = std::move(p2);
    vals = std::move(v2);
  };
  order();

  // The cap is checked once per iteration, so a started iteration (at most
  // n+1 evaluations on a shrink) is allowed to finish.
  for (int it = 0; it < opts.max_iterations && objective.can_spend(); ++it) {
    double spread_x = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      spread_x = std::max(spread_x, std::abs(pts.back()[i] - pts.front()[i]));
    if (spread_x <= opts.xatol && std::abs(vals.back() - vals.front()) <= opts.fatol) break;

    std::vector<double> centroid(n, 0.0);
    for (std::size_t k = 0; k + 1 < pts.size(); ++k)
      for (std::size_t i = 0; i < n; ++i) centroid[i] += pts[k][i];
    for (auto& c : centroid) c /= static_cast<double>(n);

    const auto blend = [&](double coeff) {
      std::vector<double> x(n);
      for (std::size_t i = 0; i < n; ++i) x[i] = centroid[i] + coeff * (centroid[i] - pts.back()[i]);
      return bounds.clip(std::move(x));
    };

    const auto xr = blend(1.0);
    const double fr = objective(xr);
    if (fr < vals.front()) {
      const auto xe = blend(2.0);
      const double fe = objective(xe);
      if (fe < fr) {
        pts.back() = xe;
        vals.back() = fe;
      } else {
        pts.back() = xr;
        vals.back() = fr;
      }
    } else if (fr < vals[pts.size() - 2]) {
      pts.back() = xr;
      vals.back() = fr;
    } else {
      const auto xc = blend(fr < vals.back() ? 0.5 : -0.5);
      const double fc = objective(xc);
      if (fc < std::min(fr, vals.back())) {
        pts.back() = xc;
        vals.back() = fc;
      } else {
        for (std::size_t k = 1; k < pts.size(); ++k) {
          for (std::size_t i = 0; i < n; ++i)
            pts[k][i] = pts.front()[i] + 0.5 * (pts[k][i] - pts.front()[i]);
          pts[k] = bounds.clip(std::move(pts[k]));
          vals[k] = objective(pts[k]);
        }
      }
    }
    order();
  }
  return {vals.front(), pts.front()};
}

// ---------------------------------------------------------------------------
// Dual annealing: the generalized-simulated-annealing global phase (Tsallis
// visiting distribution, generalized acceptance) interleaved with bounded
// Nelder-Mead local search, everything charged to one budget.
// ---------------------------------------------------------------------------

struct DualAnnealingOptions {
  double initial_temp = 5230.0;
  double visit_param = 2.62;    // q_v in (1, 3]
  double accept_param = -5.0;   // q_a
  double restart_temp_ratio = 2e-5;
  int max_iterations = 1000;
  bool local_search = true;
  NelderMeadOptions local_opts{};
};

namespace detail {

/// Tsallis visiting displacement generator (the scipy formulation).
class VisitingDistribution {
 public:
  VisitingDistribution(const Bounds& bounds, double qv) : bounds_(bounds), qv_(qv) {
    factor2_ = std::exp((4.0 - qv_) * std::log(qv_ - 1.0));
    factor3_ = std::exp((2.0 - qv_) * std::log(2.0) / (qv_ - 1.0));
    factor4p_ = std::sqrt(M_PI) * factor2_ / (factor3_ * (3.0 - qv_));
    factor5_ = 1.0 / (qv_ - 1.0) - 0.5;
    const double d1 = 2.0 - factor5_;
    factor6_ = M_PI * (1.0 - factor5_) / std::sin(M_PI * (1.0 - factor5_)) / std::exp(std::lgamma(d1));
  }

  std::vector<double> visiting(const std::vector<double>& x, int step, double temperature,
                               Rng& rng) {
    const std::size_t dim = x.size();
    std::vector<double> x_visit = x;
    if (static_cast<std::size_t>(step) < dim) {
      // change every coordinate
      for (std::size_t i = 0; i < dim; ++i) {
        const double delta = clipped_visit(temperature, rng);
        x_visit[i] = wrap(x_visit[i] + delta, i);
      }
    } else {
      // change one coordinate
      const std::size_t index = static_cast<std::size_t>(step) - dim;
      const double delta = clipped_visit(temperature, rng);
      x_visit[index] = wrap(x_visit[index] + delta, index);
    }
    return x_visit;
  }

 private:
  static constexpr double kTailLimit = 1e8;
  static constexpr double kMinVisitBound = 1e-10;

  double clipped_visit(double temperature, Rng& rng) {
    double v = visit_fn(temperature, rng);
    if (v > kTailLimit)
      v = kTailLimit * rng.next_double();
    else if (v < -kTailLimit)
      v = -kTailLimit * rng.next_double();
    return v;
  }

  double visit_fn(double temperature, Rng& rng) {
    const double x = rng.next_normal();
    const double y = rng.next_normal();
    const double factor1 = std::exp(std::log(temperature) / (qv_ - 1.0));
    const double factor4 = factor4p_ * factor1;
    const double sigmax =
        std::exp(-(qv_ - 1.0) * std::log(factor6_ / factor4) / (3.0 - qv_));
    const double den = std::exp((qv_ - 1.0) * std::log(std::abs(y)) / (3.0 - qv_));
    return sigmax * x / den;
  }

  double wrap(double v, std::size_t i) const {
    const double lo = bounds_.lower[i], range = bounds_.upper[i] - bounds_.lower[i];
    double a = std::fmod(v - lo, range) + range;
    double out = std::fmod(a, range) + lo;
    if (std::abs(out - lo) < kMinVisitBound) out += kMinVisitBound;
    return out;
  }

  Bounds bounds_;
  double qv_;
  double factor2_, factor3_, factor4p_, factor5_, factor6_;
};

}  // namespace detail

inline OptResult dual_annealing(const Objective& objective, const Bounds& bounds,
                                ShotBudget& budget, Rng& rng,
                                const DualAnnealingOptions& opts = {},
                                const std::vector<double>* x0 = nullptr) {
  OptResult result;
  result.seed = rng.key();
  ObjectiveRecorder rec(objective, budget, result);
  detail::VisitingDistribution visit(bounds, opts.visit_param);

  std::vector<double> x_current = x0 ? bounds.clip(*x0) : bounds.random_point(rng);
  double e_current = rec(x_current);
  result.stop = StopReason::MaxIterations;

  const double t1 = std::exp((opts.visit_param - 1.0) * std::log(2.0)) - 1.0;
  const double temperature_restart = opts.initial_temp * opts.restart_temp_ratio;
  const std::size_t dim = bounds.dim();
  int iteration = 0;
  int since_improve = 0;
  bool stop = false;

  while (!stop) {
    bool restarted = false;
    for (int i = 0; i < opts.max_iterations && !stop; ++i) {
      if (iteration >= opts.max_iterations) {
        stop = true;
        break;
      }
      const double s = static_cast<double>(i) + 2.0;
      const double t2 = std::exp((opts.visit_param - 1.0) * std::log(s)) - 1.0;
      const double temperature = opts.initial_temp * t1 / t2;
      if (temperature < temperature_restart) {
        // schedule bottomed out: re-anneal from a fresh random location
        if (!rec.can_spend()) {
          result.stop = StopReason::BudgetExhausted;
          stop = true;
          break;
        }
        x_current = bounds.random_point(rng);
        e_current = rec(x_current);
        restarted = true;
        break;
      }

      bool improved_best = false;
      const double temperature_step = temperature / static_cast<double>(i + 1);
      for (std::size_t j = 0; j < 2 * dim; ++j) {
        if (!rec.can_spend()) {
          result.stop = StopReason::BudgetExhausted;
          stop = true;
          break;
        }
        const auto x_visit = visit.visiting(x_current, static_cast<int>(j), temperature, rng);
        const double prev_best = result.best_estimate;
        const double e = rec(x_visit);
        if (e < e_current) {
          x_current = x_visit;
          e_current = e;
          if (e < prev_best) improved_best = true;
        } else {
          // generalized Metropolis acceptance with parameter q_a
          const double r = rng.next_double();
          const double pqv_temp =
              1.0 - (1.0 - opts.accept_param) * (e - e_current) / temperature_step;
          const double pqv =
              pqv_temp <= 0.0 ? 0.0 : std::exp(std::log(pqv_temp) / (1.0 - opts.accept_param));
          if (r <= pqv) {
            x_current = x_visit;
            e_current = e;
          }
        }
      }
      if (stop) break;

      if (opts.local_search && rec.can_spend() &&
          (improved_best || ++since_improve >= static_cast<int>(dim) * 4)) {
        const auto& seed_point = improved_best ? result.best_params : x_current;
        auto [e_ls, x_ls] = nelder_mead(rec, seed_point, bounds, opts.local_opts);
        if (e_ls < e_current) {
          x_current = x_ls;
          e_current = e_ls;
        }
        since_improve = 0;
      }
      if (!rec.can_spend()) {
        result.stop = StopReason::BudgetExhausted;
        stop = true;
        break;
      }
      ++iteration;
    }
    if (!restarted && !stop) stop = true;  // schedule finished
  }
  return result;
}

// ---------------------------------------------------------------------------
// COBYLA-style optimizer: linear approximation over a coordinate simplex at
// the trust-region scale, stepping to the model minimizer on the trust
// boundary, shrinking the radius when the step fails to improve. Terminates
// on radius convergence or budget. Stored values are not re-measured, so
// under heavy stochastic noise the method can stall at a lucky estimate and
// stop far from any true minimum.
// ---------------------------------------------------------------------------

struct CobylaOptions {
  double rho_beg = 0.5;
  double rho_end = 1e-6;
  int max_iterations = 100000;
};

inline OptResult cobyla_style(const Objective& objective, const std::vector<double>& x0,
                              const Bounds& bounds, ShotBudget& budget,
                              const CobylaOptions& opts = {}) {
  OptResult result;
  ObjectiveRecorder rec(objective, budget, result);
  const std::size_t n = x0.size();

  std::vector<double> base = bounds.clip(x0);
  double f_base = rec(base);
  double rho = opts.rho_beg;
  result.stop = StopReason::MaxIterations;

  for (int it = 0; it < opts.max_iterations; ++it) {
    if (rho < opts.rho_end) {
      result.stop = StopReason::Converged;
      break;
    }
    if (!rec.can_spend()) {
      result.stop = StopReason::BudgetExhausted;
      break;
    }
    // Linear interpolation over base + rho e_i (one iteration's evaluations
    // run to completion even if they cross the soft cap).
    std::vector<double> grad(n);
    for (std::size_t i = 0; i < n; ++i) {
      auto p = base;
      p[i] = (p[i] + rho <= bounds.upper[i]) ? p[i] + rho : p[i] - rho;
      p = bounds.clip(std::move(p));
      if (p[i] == base[i]) {
        grad[i] = 0.0;
        continue;
      }
      const double fp = rec(p);
      grad[i] = (fp - f_base) / (p[i] - base[i]);
    }
    double gnorm = 0.0;
    for (auto g : grad) gnorm += g * g;
    gnorm = std::sqrt(gnorm);
    if (gnorm < 1e-300) {
      rho *= 0.5;
      continue;
    }
    auto candidate = base;
    for (std::size_t i = 0; i < n; ++i) candidate[i] -= rho * grad[i] / gnorm;
    candidate = bounds.clip(std::move(candidate));
    const double f_cand = rec(candidate);
    const double predicted = rho * gnorm;
    if (f_cand < f_base - 0.1 * predicted) {
      base = candidate;
      f_base = f_cand;
    } else if (f_cand < f_base) {
      base = candidate;
      f_base = f_cand;
      rho *= 0.5;
    } else {
      rho *= 0.5;
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Layerwise drivers.
// ---------------------------------------------------------------------------

enum class LayerwiseMethod { Fixed, Frozen, Unfrozen };
enum class InnerOptimizer { DualAnnealing, CobylaStyle };

inline std::string to_string(LayerwiseMethod m) {
  switch (m) {
    case LayerwiseMethod::Fixed: return "fixed";
    case LayerwiseMethod::Frozen: return "frozen";
    case LayerwiseMethod::Unfrozen: return "unfrozen";
  }
  return "?";
}

inline std::string to_string(InnerOptimizer o) {
  return o == InnerOptimizer::DualAnnealing ? "da" : "cobyla";
}

/// Objective over the parameters of a depth-p ansatz.
using LayerObjective = std::function<double(int p, const std::vector<double>&)>;

struct LayerwiseOptions {
  LayerwiseMethod method = LayerwiseMethod::Unfrozen;
  InnerOptimizer inner = InnerOptimizer::DualAnnealing;
  int target_p = 1;
  std::uint64_t per_layer_cap = 2000;  // I'
  DualAnnealingOptions da{};
  CobylaOptions cobyla{};
};

namespace detail {
inline OptResult run_inner(const Objective& objective, const Bounds& bounds,
                           const std::vector<double>& x0, ShotBudget& budget, Rng& rng,
                           const LayerwiseOptions& opts) {
  if (opts.inner == InnerOptimizer::DualAnnealing)
    return dual_annealing(objective, bounds, budget, rng, opts.da, &x0);
  return cobyla_style(objective, x0, bounds, budget, opts.cobyla);
}

/// Insert (gamma_new, beta_new) = (0, 0) behind the existing layers of a
/// (gammas..., betas...) stacked vector.
inline std::vector<double> grow_params(const std::vector<double>& params, int p_old) {
  std::vector<double> out(params.begin(), params.begin() + p_old);
  out.push_back(0.0);
  out.insert(out.end(), params.begin() + p_old, params.end());
  out.push_back(0.0);
  return out;
}
}  // namespace detail

/// Grow the circuit from p' = 1 to target_p, re-optimizing after each added
/// layer. New layers start as identity (zero angles). Frozen optimizes only
/// the new layer's two parameters, unfrozen all of them, fixed goes straight
/// at depth target_p with the whole cap. Per-stage estimations are capped at
/// I', so the total is I = I' * target_p.
inline OptResult layerwise(const LayerObjective& objective, ShotBudget& budget, Rng& rng,
                           const LayerwiseOptions& opts) {
  if (opts.target_p < 1) throw std::invalid_argument("layerwise: target_p must be >= 1");
  OptResult overall;
  overall.seed = rng.key();

  const auto stage_budgeted = [&](int p, const std::vector<double>& x0,
                                  bool only_last_layer) -> OptResult {
    budget.estimation_cap =
        budget.estimations_used +
        (opts.method == LayerwiseMethod::Fixed ? opts.per_layer_cap * opts.target_p
                                               : opts.per_layer_cap);
    if (!only_last_layer) {
      Objective obj = [&, p](const std::vector<double>& x) { return objective(p, x); };
      return detail::run_inner(obj, Bounds::angle_box(2 * p), x0, budget, rng, opts);
    }
    // frozen: optimize (gamma_p, beta_p) with the prefix pinned
    std::vector<double> pinned = x0;
    Objective obj = [&, p, pinned](const std::vector<double>& tail) {
      std::vector<double> full = pinned;
      full[p - 1] = tail[0];
      full[2 * p - 1] = tail[1];
      return objective(p, full);
    };
    std::vector<double> tail0 = {x0[p - 1], x0[2 * p - 1]};
    OptResult r = detail::run_inner(obj, Bounds::angle_box(2), tail0, budget, rng, opts);
    std::vector<double> full = pinned;
    if (r.best_params.size() == 2) {
      full[p - 1] = r.best_params[0];
      full[2 * p - 1] = r.best_params[1];
    }
    r.best_params = full;
    return r;
  };

  if (opts.method == LayerwiseMethod::Fixed) {
    const auto x0 = Bounds::angle_box(2 * opts.target_p).random_point(rng);
    OptResult r = stage_budgeted(opts.target_p, x0, false);
    r.seed = overall.seed;
    return r;
  }

  std::vector<double> params = Bounds::angle_box(2).random_point(rng);
  for (int p = 1; p <= opts.target_p; ++p) {
    if (p > 1) params = detail::grow_params(params, p - 1);
    OptResult stage = stage_budgeted(p, params, opts.method == LayerwiseMethod::Frozen && p > 1);
    params = stage.best_params;
    overall.stages.push_back(std::move(stage));
  }
  const OptResult& last = overall.stages.back();
  overall.best_params = last.best_params;
  overall.best_estimate = last.best_estimate;
  overall.trace = last.trace;
  overall.stop = last.stop;
  return overall;
}

}  // namespace dgmvp
