#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include <nlohmann/json.hpp>

#include "dgmvp/encoding.hpp"
#include "dgmvp/market_data.hpp"
#include "dgmvp/statevector.hpp"

namespace dgmvp {

/// Pauli coefficient table of the risk Hamiltonian. With z = (1 - Z)/2 the
/// quadratic form a^2 x' Sigma x expands into ZZ couplings between all bit
/// pairs, per-qubit Z terms with the row sums of Sigma, and a constant:
///
///   C = (a^2/2) sum_{i<j} sum_{k1,k2} sigma_ij b^{k1} b^{k2} Z_i^{k1} Z_j^{k2}
///     + (a^2/4) sum_i sum_{k1 != k2} sigma_ii b^{k1} b^{k2} Z_i^{k1} Z_i^{k2}
///     - (a/2)  sum_i sum_k sigma~_i b^k Z_i^k + c,          b^k = 2^{k-1}
///
/// Same-asset (k1,k2)/(k2,k1) duplicates are merged with doubled coefficient;
/// the unmerged term count is kept for structural checks. The constant is
/// stored so metrics see true cost values; only the circuit drops it.
struct CostModel {
  struct ZZTerm {
    int q1, q2;
    double coeff;
  };
  struct ZTerm {
    int q;
    double coeff;
  };

  EncodingSpec spec;
  Eigen::MatrixXd sigma;         // risk matrix, kept for true-f evaluation
  std::vector<ZZTerm> zz_terms;  // merged
  std::vector<ZTerm> z_terms;
  double constant = 0.0;
  std::size_t unmerged_zz_count = 0;

  mutable std::vector<double> cost_table_;  // lazily materialized diagonal

  /// f(z) for every basis state (guarded at n*l <= 24).
  const std::vector<double>& cost_table() const {
    if (cost_table_.empty()) {
      if (spec.qubits() > kEnumerationGuardQubits)
        throw std::invalid_argument("CostModel: cost table limited to n*l <= 24 qubits");
      const std::uint64_t dim = std::uint64_t{1} << spec.qubits();
      const double a = spec.unit_lot().to_double();
      cost_table_.resize(dim);
      for (std::uint64_t z = 0; z < dim; ++z) {
        const LotVector x = decode_lots(spec, z);
        double q = 0.0;
        for (int i = 0; i < spec.n; ++i)
          for (int j = 0; j < spec.n; ++j)
            q += sigma(i, j) * static_cast<double>(x[i]) * static_cast<double>(x[j]);
        cost_table_[z] = a * a * q;
      }
    }
    return cost_table_;
  }
};

inline double eval_cost(const EncodingSpec& spec, const CovarianceMatrix& sigma,
                        std::uint64_t state) {
  const LotVector x = decode_lots(spec, state);
  double q = 0.0;
  for (int i = 0; i < spec.n; ++i)
    for (int j = 0; j < spec.n; ++j) q += sigma.sigma(i, j) * static_cast<double>(x[i]) * static_cast<double>(x[j]);
  const double a = spec.unit_lot().to_double();
  return a * a * q;
}

inline double eval_cost(const EncodingSpec& spec, const CovarianceMatrix& sigma,
                        const BitString& bits) {
  if (bits.nbits != spec.qubits()) throw std::invalid_argument("eval_cost: bit length mismatch");
  return eval_cost(spec, sigma, bits.word);
}

inline CostModel build_cost_model(const EncodingSpec& spec, const CovarianceMatrix& sigma) {
  if (sigma.dim() != spec.n) throw std::invalid_argument("build_cost_model: dimension mismatch");
  CostModel m;
  m.spec = spec;
  m.sigma = sigma.sigma;
  const double a = spec.unit_lot().to_double();
  const auto b = [](int k) { return static_cast<double>(std::int64_t{1} << (k - 1)); };

  for (int i = 1; i <= spec.n; ++i) {
    for (int j = i + 1; j <= spec.n; ++j) {
      for (int k1 = 1; k1 <= spec.l; ++k1)
        for (int k2 = 1; k2 <= spec.l; ++k2) {
          const double coeff = 0.5 * a * a * sigma.sigma(i - 1, j - 1) * b(k1) * b(k2);
          m.zz_terms.push_back({spec.qubit_index(i, k1), spec.qubit_index(j, k2), coeff});
          ++m.unmerged_zz_count;
        }
    }
    for (int k1 = 1; k1 <= spec.l; ++k1)
      for (int k2 = k1 + 1; k2 <= spec.l; ++k2) {
        // merged (k1,k2) + (k2,k1): 2 * a^2/4
        const double coeff = 0.5 * a * a * sigma.sigma(i - 1, i - 1) * b(k1) * b(k2);
        m.zz_terms.push_back({spec.qubit_index(i, k1), spec.qubit_index(i, k2), coeff});
        m.unmerged_zz_count += 2;
      }
  }
  for (int i = 1; i <= spec.n; ++i) {
    double row_sum = 0.0;
    for (int j = 0; j < spec.n; ++j) row_sum += sigma.sigma(i - 1, j);
    for (int k = 1; k <= spec.l; ++k)
      m.z_terms.push_back({spec.qubit_index(i, k), -0.5 * a * row_sum * b(k)});
  }

  // All Z eigenvalues are +1 on the zero state and f(0) = 0, so the constant
  // is minus the sum of every coefficient.
  double sum = 0.0;
  for (const auto& t : m.zz_terms) sum += t.coeff;
  for (const auto& t : m.z_terms) sum += t.coeff;
  m.constant = -sum;
  return m;
}

/// Evaluate the Pauli term table on one basis state (bit value 1 means Z
/// eigenvalue -1). Used by tests to confirm diagonal equivalence.
inline double eval_pauli_diagonal(const CostModel& m, std::uint64_t state) {
  double v = m.constant;
  for (const auto& t : m.zz_terms) {
    const bool odd = (((state >> t.q1) & 1) != 0) != (((state >> t.q2) & 1) != 0);
    v += odd ? -t.coeff : t.coeff;
  }
  for (const auto& t : m.z_terms) v += ((state >> t.q) & 1) ? -t.coeff : t.coeff;
  return v;
}

/// e^{-i gamma C} as a diagonal phase multiply; the constant is dropped as a
/// global phase, matching the gate-sequence form exactly.
inline void apply_cost_operator(Statevector& s, const CostModel& m, double gamma) {
  const auto& table = m.cost_table();
  if (table.size() != s.dim())
    throw std::invalid_argument("apply_cost_operator: model/state size mismatch");
  for (std::uint64_t z = 0; z < s.dim(); ++z) {
    const double phi = gamma * (table[z] - m.constant);
    s.amp[z] *= std::polar(1.0, -phi);
  }
}

/// The same operator as explicit RZ/RZZ gate events (for circuits that need
/// per-gate noise or hardware-style scheduling).
inline std::vector<GateEvent> cost_gate_events(const CostModel& m, double gamma,
                                               const GateDurations& dur = {}) {
  std::vector<GateEvent> events;
  events.reserve(m.zz_terms.size() + m.z_terms.size());
  for (const auto& t : m.zz_terms) {
    GateEvent ev;
    ev.kind = GateEvent::Kind::Rzz;
    ev.targets = {t.q1, t.q2, -1};
    ev.n_targets = 2;
    ev.angle = 2.0 * gamma * t.coeff;  // RZZ(theta) = exp(-i theta ZZ / 2)
    ev.duration = dur.two_qubit;
    events.push_back(ev);
  }
  for (const auto& t : m.z_terms) {
    GateEvent ev;
    ev.kind = GateEvent::Kind::Rz;
    ev.targets = {t.q, -1, -1};
    ev.n_targets = 1;
    ev.angle = 2.0 * gamma * t.coeff;
    ev.duration = dur.single_qubit;
    events.push_back(ev);
  }
  return events;
}

inline nlohmann::json cost_model_to_json(const CostModel& m) {
  nlohmann::json j;
  j["n"] = m.spec.n;
  j["l"] = m.spec.l;
  j["constant"] = m.constant;
  auto terms = nlohmann::json::array();
  for (const auto& t : m.zz_terms)
    terms.push_back({{"qubits", {t.q1, t.q2}}, {"coefficient", t.coeff}});
  for (const auto& t : m.z_terms) terms.push_back({{"qubits", {t.q}}, {"coefficient", t.coeff}});
  j["terms"] = terms;
  return j;
}

}  // namespace dgmvp
