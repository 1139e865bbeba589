#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>

#include "dgmvp/pauli.hpp"
#include "dgmvp/rng.hpp"

using namespace dgmvp;

TEST_CASE("single-qubit products carry the right phases") {
  const int nq = 1;
  const auto X = PauliSum::string(nq, {{0, Pauli::X}});
  const auto Y = PauliSum::string(nq, {{0, Pauli::Y}});
  const auto Z = PauliSum::string(nq, {{0, Pauli::Z}});
  REQUIRE((X * X).approx_equal(PauliSum::identity(nq)));
  REQUIRE((X * Y).approx_equal(Z * std::complex<double>(0, 1)));
  REQUIRE((Y * X).approx_equal(Z * std::complex<double>(0, -1)));
  REQUIRE((Z * X).approx_equal(Y * std::complex<double>(0, 1)));
}

TEST_CASE("universe mismatch is rejected") {
  const auto a = PauliSum::identity(2);
  const auto b = PauliSum::identity(3);
  REQUIRE_THROWS_AS(a * b, std::invalid_argument);
}

TEST_CASE("dense conversion matches the product algebra on random sums") {
  Rng rng(17);
  const int nq = 3;
  for (int trial = 0; trial < 25; ++trial) {
    PauliSum a(nq), b(nq);
    for (int t = 0; t < 4; ++t) {
      std::uint64_t ka = 0, kb = 0;
      for (int q = 0; q < nq; ++q) {
        ka |= rng.next_below(4) << (2 * q);
        kb |= rng.next_below(4) << (2 * q);
      }
      a.add_term(ka, std::complex<double>(rng.next_double() - 0.5, rng.next_double() - 0.5));
      b.add_term(kb, std::complex<double>(rng.next_double() - 0.5, rng.next_double() - 0.5));
    }
    const Eigen::MatrixXcd lhs = (a * b).to_dense();
    const Eigen::MatrixXcd rhs = a.to_dense() * b.to_dense();
    REQUIRE((lhs - rhs).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("commutator of an operator with itself vanishes") {
  const int nq = 2;
  const auto s = s_minus(nq, 0, 1);
  REQUIRE(s.commutator(s).empty());
}

TEST_CASE("exchange and carry generators commute at the same bit position") {
  // S on (q0, q1), carry generator on (q2; q0, q1)
  const int nq = 3;
  const auto s = s_minus(nq, 1, 0);
  const auto p = p_minus(nq, 2, 0, 1);
  REQUIRE(s.commutator(p).empty());
}

TEST_CASE("Z-sandwich flips commute into the swap generators") {
  const int nq = 2;
  const auto za = pauli_z(nq, 0);
  const auto sp = s_plus(nq, 0, 1);
  const auto sm = s_minus(nq, 0, 1);
  // [Z_A, S+] = Z_A S+ - S+ Z_A = -S- - S- = -2 S-
  REQUIRE(za.commutator(sp).approx_equal(sm * -2.0));
  // dense cross-check
  const Eigen::MatrixXcd lhs = za.to_dense() * sp.to_dense() - sp.to_dense() * za.to_dense();
  REQUIRE((lhs - (sm * -2.0).to_dense()).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("support decomposition recovers exact coefficients") {
  const int nq = 1;
  const auto ident = PauliSum::identity(nq);
  const auto dec = support_decompose(Eigen::MatrixXcd::Identity(2, 2), {ident});
  REQUIRE(dec.coefficients.size() == 1);
  REQUIRE(std::abs(dec.coefficients[0] - 1.0) < 1e-14);
  REQUIRE(dec.residual < 1e-14);
}

TEST_CASE("support decomposition rejects non-orthogonal bases") {
  const int nq = 2;
  const std::vector<PauliSum> bad = {s_minus(nq, 0, 1),
                                     s_minus(nq, 0, 1) + PauliSum::identity(nq, 0.1)};
  REQUIRE_THROWS_AS(support_decompose(Eigen::MatrixXcd::Identity(4, 4), bad),
                    std::invalid_argument);
}

TEST_CASE("two-qubit excitation exponential decomposes onto its three terms") {
  const double beta = 0.7;
  const int nq = 2;
  const auto gen = s_minus(nq, 0, 1);
  const Eigen::MatrixXcd u = dense_exp(beta * gen.to_dense());
  const auto dec = support_decompose(
      u, {PauliSum::identity(nq), pauli_zz(nq, 0, 1), s_minus(nq, 0, 1)});
  const double c2 = std::cos(beta / 2), s2 = std::sin(beta / 2);
  REQUIRE(std::abs(dec.coefficients[0] - c2 * c2) < 1e-12);
  REQUIRE(std::abs(dec.coefficients[1] - s2 * s2) < 1e-12);
  REQUIRE(std::abs(dec.coefficients[2] - std::sin(beta)) < 1e-12);
  REQUIRE(dec.residual < 1e-12);
}

TEST_CASE("swap sandwich has the bridged coefficient sin^2 on S+AC") {
  const double beta = 0.9;
  const int nq = 3;
  const Eigen::MatrixXcd ebc = dense_exp(beta * s_minus(nq, 1, 2).to_dense());
  const Eigen::MatrixXcd u = ebc * dense_exp(beta * s_minus(nq, 0, 1).to_dense()) * ebc;
  const std::vector<PauliSum> basis = {PauliSum::identity(nq), pauli_zz(nq, 0, 1),
                                       pauli_zz(nq, 1, 2),     s_minus(nq, 0, 1),
                                       s_minus(nq, 1, 2),      s_plus(nq, 0, 2)};
  const auto dec = support_decompose(u, basis);
  REQUIRE(std::abs(dec.coefficients[5] - std::sin(beta) * std::sin(beta)) < 1e-12);
  REQUIRE(dec.residual < 1e-12);
}

TEST_CASE("product identity suite passes") {
  for (const auto& c : verify_product_identities()) {
    INFO(c.name << " max_error=" << c.max_error);
    REQUIRE(c.pass);
  }
}

TEST_CASE("vanishing triple products") {
  const int nq = 4;
  const auto zero1 = s_minus(nq, 2, 3) * p_minus(nq, 0, 1, 2) * s_minus(nq, 2, 3);
  REQUIRE(zero1.empty());
  const auto zero2 = s_minus(nq, 0, 3) * p_minus(nq, 0, 1, 2) * s_minus(nq, 0, 3);
  REQUIRE(zero2.empty());
  const auto zero3 = s_minus(nq, 0, 1) * s_minus(nq, 1, 2) * s_minus(nq, 0, 1);
  REQUIRE(zero3.empty());
}

TEST_CASE("P generators are symmetric in their trailing indices") {
  const int nq = 3;
  REQUIRE(p_plus(nq, 0, 1, 2).approx_equal(p_plus(nq, 0, 2, 1)));
  REQUIRE(p_minus(nq, 0, 1, 2).approx_equal(p_minus(nq, 0, 2, 1)));
}

TEST_CASE("three-qubit bridge patterns verify on a beta grid") {
  const std::vector<double> betas = {0.0, 0.5, M_PI / 2, 1.1, 2.2};
  const auto reports = verify_three_qubit_bridges(betas);
  for (const auto& r : reports) {
    INFO("pattern " << r.pattern << " beta=" << r.beta << " err=" << r.max_coeff_error
                    << " resid=" << r.residual);
    REQUIRE(r.pass);
  }
}

TEST_CASE("bridge patterns at pi/2 put unit weight on the bridged generator") {
  const auto reports = verify_three_qubit_bridges({M_PI / 2});
  REQUIRE(!reports.empty());
  // direct decomposition of pattern (a) at pi/2
  const int nq = 4;
  const double beta = M_PI / 2;
  const Eigen::MatrixXcd wrap = dense_exp(beta * s_minus(nq, 2, 3).to_dense());
  const Eigen::MatrixXcd u = wrap * dense_exp(beta * p_minus(nq, 0, 1, 2).to_dense()) * wrap;
  const auto dec = support_decompose(
      u, {PauliSum::identity(nq), p_plus(nq, 0, 1, 3)});
  REQUIRE(std::abs(dec.coefficients[1] - 1.0) < 1e-12);
}

TEST_CASE("bridge patterns a and c disagree in sign on the bridged generator") {
  const double beta = 1.1;
  const int nq = 4;
  const Eigen::MatrixXcd pm = p_minus(nq, 0, 1, 2).to_dense();
  const Eigen::MatrixXcd wrap_a = dense_exp(beta * s_minus(nq, 2, 3).to_dense());
  const Eigen::MatrixXcd wrap_c = dense_exp(beta * s_minus(nq, 0, 3).to_dense());
  const Eigen::MatrixXcd ua = wrap_a * dense_exp(beta * pm) * wrap_a;
  const Eigen::MatrixXcd uc = wrap_c * dense_exp(beta * pm) * wrap_c;
  const auto ca = hs_inner(p_plus(nq, 0, 1, 3).to_dense(), ua) /
                  hs_inner(p_plus(nq, 0, 1, 3).to_dense(), p_plus(nq, 0, 1, 3).to_dense()).real();
  const auto cc = hs_inner(p_plus(nq, 3, 1, 2).to_dense(), uc) /
                  hs_inner(p_plus(nq, 3, 1, 2).to_dense(), p_plus(nq, 3, 1, 2).to_dense()).real();
  REQUIRE(std::abs(ca - std::sin(beta) * std::sin(beta)) < 1e-12);
  REQUIRE(std::abs(cc + std::sin(beta) * std::sin(beta)) < 1e-12);
}

TEST_CASE("beta = 0 reduces every pattern to the identity") {
  const auto reports = verify_three_qubit_bridges({0.0});
  for (const auto& r : reports) {
    REQUIRE(r.pass);
  }
  const int nq = 4;
  const Eigen::MatrixXcd wrap = dense_exp(0.0 * s_minus(nq, 2, 3).to_dense());
  REQUIRE((wrap - Eigen::MatrixXcd::Identity(16, 16)).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("dense conversion is capped at five qubits") {
  REQUIRE_THROWS_AS(PauliSum::identity(6).to_dense(), std::invalid_argument);
}
