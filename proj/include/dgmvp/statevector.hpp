#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <fstream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dgmvp/rng.hpp"

namespace dgmvp {

using cplx = std::complex<double>;

inline constexpr int kMaxQubits = 24;

/// Dense statevector over n*l qubits. Amplitude index bit q equals the value
/// of qubit q, matching the encoding module's global qubit order.
struct Statevector {
  int nq = 0;
  std::vector<cplx> amp;

  Statevector() = default;
  explicit Statevector(int qubits) : nq(qubits) {
    if (qubits < 1 || qubits > kMaxQubits)
      throw std::invalid_argument("Statevector: qubit count out of supported range");
    amp.assign(std::size_t{1} << qubits, cplx(0.0, 0.0));
  }

  static Statevector zero_state(int qubits) {
    Statevector s(qubits);
    s.amp[0] = 1.0;
    return s;
  }

  static Statevector basis_state(int qubits, std::uint64_t index) {
    Statevector s(qubits);
    if (index >= s.amp.size()) throw std::invalid_argument("basis_state: index out of range");
    s.amp[index] = 1.0;
    return s;
  }

  std::size_t dim() const { return amp.size(); }

  double norm() const {
    double s = 0.0;
    for (const auto& a : amp) s += std::norm(a);
    return std::sqrt(s);
  }

  void renormalize() {
    const double nrm = norm();
    if (nrm <= 0.0) throw std::runtime_error("Statevector: cannot renormalize zero vector");
    const double inv = 1.0 / nrm;
    for (auto& a : amp) a *= inv;
  }

  void check_qubit(int q) const {
    if (q < 0 || q >= nq) throw std::out_of_range("qubit index out of range");
  }
};

inline void apply_x(Statevector& s, int q) {
  s.check_qubit(q);
  const std::uint64_t bit = std::uint64_t{1} << q;
  for (std::uint64_t i = 0; i < s.dim(); ++i)
    if (!(i & bit)) std::swap(s.amp[i], s.amp[i | bit]);
}

/// RZ(theta) = exp(-i theta Z / 2): bit 0 (Z eigenvalue +1) gets e^{-i theta/2}.
inline void apply_rz(Statevector& s, int q, double theta) {
  s.check_qubit(q);
  const cplx p0 = std::polar(1.0, -theta / 2.0);
  const cplx p1 = std::conj(p0);
  const std::uint64_t bit = std::uint64_t{1} << q;
  for (std::uint64_t i = 0; i < s.dim(); ++i) s.amp[i] *= (i & bit) ? p1 : p0;
}

/// RZZ(theta) = exp(-i theta Z Z / 2): even parity gets e^{-i theta/2}.
inline void apply_rzz(Statevector& s, int q1, int q2, double theta) {
  s.check_qubit(q1);
  s.check_qubit(q2);
  if (q1 == q2) throw std::invalid_argument("apply_rzz: qubits must differ");
  const cplx p0 = std::polar(1.0, -theta / 2.0);
  const cplx p1 = std::conj(p0);
  const std::uint64_t b1 = std::uint64_t{1} << q1, b2 = std::uint64_t{1} << q2;
  for (std::uint64_t i = 0; i < s.dim(); ++i) {
    const bool odd = (((i & b1) != 0) != ((i & b2) != 0));
    s.amp[i] *= odd ? p1 : p0;
  }
}

inline void apply_cnot(Statevector& s, int control, int target) {
  s.check_qubit(control);
  s.check_qubit(target);
  if (control == target) throw std::invalid_argument("apply_cnot: qubits must differ");
  const std::uint64_t cb = std::uint64_t{1} << control, tb = std::uint64_t{1} << target;
  for (std::uint64_t i = 0; i < s.dim(); ++i)
    if ((i & cb) && !(i & tb)) std::swap(s.amp[i], s.amp[i | tb]);
}

/// Ry(theta) on `target` conditioned on `control` = 1.
inline void apply_cry(Statevector& s, int control, int target, double theta) {
  s.check_qubit(control);
  s.check_qubit(target);
  if (control == target) throw std::invalid_argument("apply_cry: qubits must differ");
  const double c = std::cos(theta / 2.0), sn = std::sin(theta / 2.0);
  const std::uint64_t cb = std::uint64_t{1} << control, tb = std::uint64_t{1} << target;
  for (std::uint64_t i = 0; i < s.dim(); ++i) {
    if ((i & cb) && !(i & tb)) {
      const cplx a0 = s.amp[i], a1 = s.amp[i | tb];
      s.amp[i] = c * a0 - sn * a1;
      s.amp[i | tb] = sn * a0 + c * a1;
    }
  }
}

/// Ry(theta) on `target` conditioned on both controls = 1.
inline void apply_ccry(Statevector& s, int c1, int c2, int target, double theta) {
  s.check_qubit(c1);
  s.check_qubit(c2);
  s.check_qubit(target);
  if (c1 == c2 || c1 == target || c2 == target)
    throw std::invalid_argument("apply_ccry: qubits must be distinct");
  const double c = std::cos(theta / 2.0), sn = std::sin(theta / 2.0);
  const std::uint64_t b1 = std::uint64_t{1} << c1, b2 = std::uint64_t{1} << c2;
  const std::uint64_t tb = std::uint64_t{1} << target;
  for (std::uint64_t i = 0; i < s.dim(); ++i) {
    if ((i & b1) && (i & b2) && !(i & tb)) {
      const cplx a0 = s.amp[i], a1 = s.amp[i | tb];
      s.amp[i] = c * a0 - sn * a1;
      s.amp[i | tb] = sn * a0 + c * a1;
    }
  }
}

/// exp(beta S) on qubits (qa, qb): the number-conserving rotation
///   |1_a 0_b> -> cos(beta)|1_a 0_b> + sin(beta)|0_a 1_b>
///   |0_a 1_b> -> cos(beta)|0_a 1_b> - sin(beta)|1_a 0_b>
/// with |00> and |11> untouched. Closed form of the two-qubit excitation
/// exponential, applied per amplitude pair.
inline void apply_two_excitation(Statevector& s, int qa, int qb, double beta) {
  s.check_qubit(qa);
  s.check_qubit(qb);
  if (qa == qb) throw std::invalid_argument("apply_two_excitation: qubits must differ");
  const double c = std::cos(beta), sn = std::sin(beta);
  const std::uint64_t ba = std::uint64_t{1} << qa, bb = std::uint64_t{1} << qb;
  for (std::uint64_t i = 0; i < s.dim(); ++i) {
    if ((i & ba) && !(i & bb)) {  // i is the |1_a 0_b> member of the pair
      const std::uint64_t j = (i ^ ba) | bb;
      const cplx a10 = s.amp[i], a01 = s.amp[j];
      s.amp[i] = c * a10 - sn * a01;
      s.amp[j] = c * a01 + sn * a10;
    }
  }
}

/// exp(beta P) on (q_hi; q_b, q_c): the carry/borrow rotation
///   |0_hi 1_b 1_c> -> cos(beta)|011> + sin(beta)|100>
///   |1_hi 0_b 0_c> -> cos(beta)|100> - sin(beta)|011>
/// with the other six basis patterns untouched.
inline void apply_three_excitation(Statevector& s, int q_hi, int q_b, int q_c, double beta) {
  s.check_qubit(q_hi);
  s.check_qubit(q_b);
  s.check_qubit(q_c);
  if (q_hi == q_b || q_hi == q_c || q_b == q_c)
    throw std::invalid_argument("apply_three_excitation: qubits must be distinct");
  const double c = std::cos(beta), sn = std::sin(beta);
  const std::uint64_t bh = std::uint64_t{1} << q_hi;
  const std::uint64_t bb = std::uint64_t{1} << q_b, bc = std::uint64_t{1} << q_c;
  for (std::uint64_t i = 0; i < s.dim(); ++i) {
    if (!(i & bh) && (i & bb) && (i & bc)) {  // i is |0_hi 1_b 1_c>
      const std::uint64_t j = (i | bh) ^ bb ^ bc;
      const cplx a011 = s.amp[i], a100 = s.amp[j];
      s.amp[i] = c * a011 - sn * a100;
      s.amp[j] = c * a100 + sn * a011;
    }
  }
}

/// Fig-8-style gate decomposition of exp(beta S); equals the analytic form.
inline void two_excitation_circuit(Statevector& s, int qa, int qb, double beta) {
  apply_cnot(s, qa, qb);
  apply_cry(s, qb, qa, -2.0 * beta);
  apply_cnot(s, qa, qb);
}

/// Fig-8-style gate decomposition of exp(beta P); equals the analytic form.
inline void three_excitation_circuit(Statevector& s, int q_hi, int q_b, int q_c, double beta) {
  apply_cnot(s, q_hi, q_b);
  apply_cnot(s, q_hi, q_c);
  apply_ccry(s, q_b, q_c, q_hi, 2.0 * beta);
  apply_cnot(s, q_hi, q_c);
  apply_cnot(s, q_hi, q_b);
}

/// <state| C |state> for a diagonal operator given per-basis-state values.
inline double expectation_diagonal(const Statevector& s, std::span<const double> costs) {
  if (costs.size() != s.dim())
    throw std::invalid_argument("expectation_diagonal: cost table size mismatch");
  double e = 0.0;
  for (std::uint64_t i = 0; i < s.dim(); ++i) e += std::norm(s.amp[i]) * costs[i];
  return e;
}

namespace detail {
inline std::vector<double> probability_prefix(const Statevector& s) {
  std::vector<double> prefix(s.dim());
  double acc = 0.0;
  for (std::uint64_t i = 0; i < s.dim(); ++i) {
    acc += std::norm(s.amp[i]);
    prefix[i] = acc;
  }
  return prefix;
}

inline std::uint64_t index_from_uniform(const std::vector<double>& prefix, double u) {
  const double target = u * prefix.back();
  auto it = std::upper_bound(prefix.begin(), prefix.end(), target);
  if (it == prefix.end()) --it;
  return static_cast<std::uint64_t>(it - prefix.begin());
}
}  // namespace detail

/// Draw `shots` basis states i.i.d. from |amp|^2. Shot i uses its own child
/// stream of a base stream derived from `rng`, so the draw for shot i does
/// not depend on how many random numbers other shots consumed. The noisy
/// trajectory sampler uses the same discipline, which makes the
/// zero-duration noise limit reproduce these samples bit for bit.
inline std::vector<std::uint64_t> sample(const Statevector& s, std::uint64_t shots, Rng& rng) {
  if (shots < 1) throw std::invalid_argument("sample: shots must be >= 1");
  const auto prefix = detail::probability_prefix(s);
  Rng base = rng.split(rng.next_u64());
  std::vector<std::uint64_t> out(shots);
  for (std::uint64_t i = 0; i < shots; ++i) {
    Rng child = base.split(i);
    out[i] = detail::index_from_uniform(prefix, child.next_double());
  }
  return out;
}

/// Parameterized circuit element; excitation blocks are treated as single
/// events with the duration of their gate decomposition.
struct GateEvent {
  enum class Kind { PauliX, Rz, Rzz, TwoExcitation, ThreeExcitation };
  Kind kind = Kind::PauliX;
  std::array<int, 3> targets{-1, -1, -1};
  int n_targets = 1;
  double angle = 0.0;
  double duration = 0.0;  // seconds, for the noise model
};

/// Wall-clock cost per gate kind, used by the thermal-relaxation model.
/// Excitation blocks carry the summed duration of their gate decompositions
/// (two-excitation: 2 CX + CRy; three-excitation: 4 CX + doubly-controlled Ry
/// counted as two two-qubit gates). All values are config-exposed.
struct GateDurations {
  double single_qubit = 50e-9;
  double two_qubit = 300e-9;
  double two_excitation = 3 * 300e-9;
  double three_excitation = 6 * 300e-9;
  double measurement = 1e-6;

  double for_kind(GateEvent::Kind kind) const {
    switch (kind) {
      case GateEvent::Kind::PauliX:
      case GateEvent::Kind::Rz:
        return single_qubit;
      case GateEvent::Kind::Rzz:
        return two_qubit;
      case GateEvent::Kind::TwoExcitation:
        return two_excitation;
      case GateEvent::Kind::ThreeExcitation:
        return three_excitation;
    }
    return single_qubit;
  }
};

inline void apply_event(Statevector& s, const GateEvent& ev) {
  switch (ev.kind) {
    case GateEvent::Kind::PauliX:
      apply_x(s, ev.targets[0]);
      break;
    case GateEvent::Kind::Rz:
      apply_rz(s, ev.targets[0], ev.angle);
      break;
    case GateEvent::Kind::Rzz:
      apply_rzz(s, ev.targets[0], ev.targets[1], ev.angle);
      break;
    case GateEvent::Kind::TwoExcitation:
      apply_two_excitation(s, ev.targets[0], ev.targets[1], ev.angle);
      break;
    case GateEvent::Kind::ThreeExcitation:
      apply_three_excitation(s, ev.targets[0], ev.targets[1], ev.targets[2], ev.angle);
      break;
  }
}

inline void apply_events(Statevector& s, std::span<const GateEvent> events) {
  for (const auto& ev : events) apply_event(s, ev);
}

/// Binary dump of little-endian complex doubles plus a JSON sidecar
/// describing the register (written to <path> and <path>.json).
inline void save_statevector(const Statevector& s, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_statevector: cannot open " + path);
  out.write(reinterpret_cast<const char*>(s.amp.data()),
            static_cast<std::streamsize>(s.amp.size() * sizeof(cplx)));
  nlohmann::json meta;
  meta["qubit_count"] = s.nq;
  meta["format"] = "complex128-little-endian";
  meta["ordering"] = "amplitude index bit q = value of qubit q; qubit q = (t-1)*l + (k-1)";
  std::ofstream side(path + ".json");
  side << meta.dump(2) << "\n";
}

inline Statevector load_statevector(const std::string& path) {
  std::ifstream side(path + ".json");
  if (!side) throw std::runtime_error("load_statevector: missing sidecar for " + path);
  nlohmann::json meta = nlohmann::json::parse(side);
  Statevector s(meta.at("qubit_count").get<int>());
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_statevector: cannot open " + path);
  in.read(reinterpret_cast<char*>(s.amp.data()),
          static_cast<std::streamsize>(s.amp.size() * sizeof(cplx)));
  if (!in) throw std::runtime_error("load_statevector: truncated dump " + path);
  return s;
}

}  // namespace dgmvp
