#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "dgmvp/encoding.hpp"
#include "dgmvp/hamiltonian.hpp"
#include "dgmvp/statevector.hpp"

namespace dgmvp {

/// Extreme costs over the feasible set, from exhaustive enumeration.
struct InstanceGroundTruth {
  double f_min = 0.0;
  double f_max = 0.0;
  std::vector<std::uint64_t> argmin;  // all tied minimizers

  bool degenerate() const { return !(f_max > f_min); }
  double tie_eps() const { return 1e-12 * std::max(f_max - f_min, std::abs(f_min)); }
};

inline InstanceGroundTruth ground_truth(const EncodingSpec& spec, const CostModel& model) {
  InstanceGroundTruth t;
  t.f_min = std::numeric_limits<double>::infinity();
  t.f_max = -std::numeric_limits<double>::infinity();
  const auto& table = model.cost_table();
  FeasibleEnumerator it(spec);
  std::uint64_t z;
  while (it.next(z)) {
    const double f = table[z];
    t.f_min = std::min(t.f_min, f);
    t.f_max = std::max(t.f_max, f);
  }
  const double eps = t.tie_eps();
  FeasibleEnumerator it2(spec);
  while (it2.next(z))
    if (table[z] <= t.f_min + eps) t.argmin.push_back(z);
  return t;
}

/// (value - f_min) / (f_max - f_min); degenerate instances report 0.
inline double alpha_mean(double expectation, const InstanceGroundTruth& truth) {
  if (truth.degenerate()) return 0.0;
  return (expectation - truth.f_min) / (truth.f_max - truth.f_min);
}

/// Conditional mean cost over the lowest-cost k percent of probability mass,
/// normalized like alpha_mean. The boundary state is included fractionally.
inline double alpha_mean_k(std::vector<std::pair<double, double>> cost_mass, double k_percent,
                           const InstanceGroundTruth& truth) {
  if (k_percent <= 0.0 || k_percent > 100.0)
    throw std::invalid_argument("alpha_mean_k: k must be in (0, 100]");
  if (truth.degenerate()) return 0.0;
  double total = 0.0;
  for (const auto& [f, m] : cost_mass) total += m;
  if (total <= 0.0) throw std::invalid_argument("alpha_mean_k: empty distribution");
  std::sort(cost_mass.begin(), cost_mass.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  const double want = total * k_percent / 100.0;
  double used = 0.0, acc = 0.0;
  for (const auto& [f, m] : cost_mass) {
    const double take = std::min(m, want - used);
    if (take <= 0.0) break;
    acc += take * f;
    used += take;
    if (used >= want) break;
  }
  return alpha_mean(acc / used, truth);
}

inline std::vector<std::pair<double, double>> cost_mass_of_state(const Statevector& s,
                                                                 const CostModel& model) {
  const auto& table = model.cost_table();
  std::vector<std::pair<double, double>> out;
  out.reserve(s.dim());
  for (std::uint64_t z = 0; z < s.dim(); ++z) {
    const double m = std::norm(s.amp[z]);
    if (m > 0.0) out.emplace_back(table[z], m);
  }
  return out;
}

inline std::vector<std::pair<double, double>> cost_mass_of_samples(
    const std::vector<std::uint64_t>& samples, const CostModel& model) {
  if (samples.empty()) throw std::invalid_argument("cost_mass_of_samples: empty sample set");
  const auto& table = model.cost_table();
  std::vector<std::pair<double, double>> out;
  out.reserve(samples.size());
  const double w = 1.0 / static_cast<double>(samples.size());
  for (auto z : samples) out.emplace_back(table[z], w);
  return out;
}

/// Support cutoff for exact-statevector metrics.
inline constexpr double kSupportThreshold = 1e-12;

inline double alpha_min_sampled(const std::vector<std::uint64_t>& samples, const CostModel& model,
                                const InstanceGroundTruth& truth) {
  if (samples.empty()) throw std::invalid_argument("alpha_min_sampled: empty sample set");
  const auto& table = model.cost_table();
  double best = std::numeric_limits<double>::infinity();
  for (auto z : samples) best = std::min(best, table[z]);
  return alpha_mean(best, truth);
}

inline double alpha_min_exact(const Statevector& s, const CostModel& model,
                              const InstanceGroundTruth& truth) {
  const auto& table = model.cost_table();
  double best = std::numeric_limits<double>::infinity();
  for (std::uint64_t z = 0; z < s.dim(); ++z)
    if (std::norm(s.amp[z]) > kSupportThreshold) best = std::min(best, table[z]);
  if (!std::isfinite(best)) throw std::invalid_argument("alpha_min_exact: empty support");
  return alpha_mean(best, truth);
}

/// Probability of measuring a global minimizer (all ties summed).
inline double p_gm(const Statevector& s, const InstanceGroundTruth& truth) {
  double p = 0.0;
  for (auto z : truth.argmin) p += std::norm(s.amp[z]);
  return p;
}

/// Probability of the lowest-cost state within the circuit's own support.
inline double p_min(const Statevector& s, const CostModel& model,
                    const InstanceGroundTruth& truth) {
  const auto& table = model.cost_table();
  double best = std::numeric_limits<double>::infinity();
  for (std::uint64_t z = 0; z < s.dim(); ++z)
    if (std::norm(s.amp[z]) > kSupportThreshold) best = std::min(best, table[z]);
  if (!std::isfinite(best)) return 0.0;
  double p = 0.0;
  const double eps = truth.tie_eps();
  for (std::uint64_t z = 0; z < s.dim(); ++z)
    if (std::norm(s.amp[z]) > kSupportThreshold && table[z] <= best + eps)
      p += std::norm(s.amp[z]);
  return p;
}

/// Measurements needed to see the global minimum at least once with success
/// probability p_s: log(1 - p_s) / log(1 - p_gm).
inline double shots_for_success(double p_gm_value, double p_success) {
  if (p_success <= 0.0 || p_success >= 1.0)
    throw std::invalid_argument("shots_for_success: p_s must be in (0, 1)");
  if (p_gm_value <= 0.0) return std::numeric_limits<double>::infinity();
  if (p_gm_value >= 1.0) return 1.0;
  // at least one measurement is always needed
  return std::max(1.0, std::log1p(-p_success) / std::log1p(-p_gm_value));
}

struct PowerLawFit {
  double a = 0.0;       // prefactor
  double b = 0.0;       // exponent
  double b_stderr = 0.0;
};

/// Least squares of log y = log a + b log x; returns the exponent with its
/// standard error.
inline PowerLawFit fit_power_law(const std::vector<std::pair<double, double>>& points) {
  if (points.size() < 3) throw std::invalid_argument("fit_power_law: need at least 3 points");
  const std::size_t m = points.size();
  double sx = 0, sy = 0;
  for (const auto& [x, y] : points) {
    if (x <= 0.0 || y <= 0.0) throw std::invalid_argument("fit_power_law: points must be positive");
    sx += std::log(x);
    sy += std::log(y);
  }
  const double mx = sx / static_cast<double>(m), my = sy / static_cast<double>(m);
  double sxx = 0, sxy = 0;
  for (const auto& [x, y] : points) {
    const double dx = std::log(x) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(y) - my);
  }
  if (sxx <= 0.0) throw std::invalid_argument("fit_power_law: degenerate abscissae");
  PowerLawFit fit;
  fit.b = sxy / sxx;
  fit.a = std::exp(my - fit.b * mx);
  double sse = 0.0;
  for (const auto& [x, y] : points) {
    const double r = std::log(y) - (std::log(fit.a) + fit.b * std::log(x));
    sse += r * r;
  }
  fit.b_stderr = std::sqrt(std::max(sse, 0.0) / static_cast<double>(m - 2) / sxx);
  return fit;
}

enum class MetricSource { Sampled, ExactStatevector };

/// The per-run metric bundle appended to experiment CSVs.
struct MetricReport {
  double alpha_mean_v = 0.0;
  double alpha_mean_5 = 0.0;
  double alpha_mean_20 = 0.0;
  double alpha_min_v = 0.0;
  double p_min_v = 0.0;
  double p_gm_v = 0.0;
  MetricSource source = MetricSource::ExactStatevector;
  std::uint64_t n_m_shots = 0;  // N_M when sampled

  bool monotone() const {
    return alpha_min_v <= alpha_mean_5 + 1e-12 && alpha_mean_5 <= alpha_mean_20 + 1e-12 &&
           alpha_mean_20 <= alpha_mean_v + 1e-12;
  }
};

inline MetricReport exact_report(const Statevector& s, const CostModel& model,
                                 const InstanceGroundTruth& truth) {
  MetricReport r;
  r.source = MetricSource::ExactStatevector;
  const auto mass = cost_mass_of_state(s, model);
  r.alpha_mean_v = alpha_mean(expectation_diagonal(s, model.cost_table()), truth);
  r.alpha_mean_5 = alpha_mean_k(mass, 5.0, truth);
  r.alpha_mean_20 = alpha_mean_k(mass, 20.0, truth);
  r.alpha_min_v = alpha_min_exact(s, model, truth);
  r.p_min_v = p_min(s, model, truth);
  r.p_gm_v = p_gm(s, truth);
  return r;
}

inline MetricReport sampled_report(const std::vector<std::uint64_t>& samples,
                                   const CostModel& model, const InstanceGroundTruth& truth) {
  MetricReport r;
  r.source = MetricSource::Sampled;
  r.n_m_shots = samples.size();
  const auto mass = cost_mass_of_samples(samples, model);
  const auto& table = model.cost_table();
  double mean = 0.0;
  for (auto z : samples) mean += table[z];
  mean /= static_cast<double>(samples.size());
  r.alpha_mean_v = alpha_mean(mean, truth);
  r.alpha_mean_5 = alpha_mean_k(mass, 5.0, truth);
  r.alpha_mean_20 = alpha_mean_k(mass, 20.0, truth);
  r.alpha_min_v = alpha_min_sampled(samples, model, truth);
  const double eps = truth.tie_eps();
  double best = std::numeric_limits<double>::infinity();
  for (auto z : samples) best = std::min(best, table[z]);
  std::uint64_t hits_min = 0, hits_gm = 0;
  for (auto z : samples) {
    if (table[z] <= best + eps) ++hits_min;
    if (table[z] <= truth.f_min + eps) ++hits_gm;
  }
  r.p_min_v = static_cast<double>(hits_min) / static_cast<double>(samples.size());
  r.p_gm_v = static_cast<double>(hits_gm) / static_cast<double>(samples.size());
  return r;
}

}  // namespace dgmvp
