#include <cmath>
#include <complex>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "doctest.h"

#include "stasim/analytics.hpp"
#include "stasim/classical.hpp"
#include "stasim/quantum.hpp"
#include "stasim/statistics.hpp"

using namespace stasim;

namespace {

const double kWi = 10.0;
const double kWf = 10.0 * std::numbers::sqrt3;

FockBasisConfig basis(std::size_t n, double hbar = 1.0) {
  FockBasisConfig cfg;
  cfg.dimension = n;
  cfg.omega_ref = kWi;
  cfg.hbar = hbar;
  return cfg;
}

FrequencyProtocol short_ramp() { return FrequencyProtocol::cosine_ramp(kWi, kWf, 1e-4); }

}  // namespace

TEST_CASE("basis configuration validation") {
  CHECK_NOTHROW(basis(16).validate());
  CHECK_THROWS_AS(basis(2).validate(), std::invalid_argument);
  CHECK_THROWS_AS(basis(17).validate(), std::invalid_argument);
  auto cfg = basis(16);
  cfg.hbar = 0.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("bare Hamiltonian entries in the reference ladder basis") {
  const auto cfg = basis(64);
  const auto h = h0_matrix(kWi, cfg);
  for (int n = 0; n < 64; ++n) CHECK(h(n, n) == doctest::Approx(kWi * (n + 0.5)));
  CHECK(h.isApprox(h.transpose()));
  CHECK((h - Eigen::MatrixXd(h.diagonal().asDiagonal())).norm() < 1e-12);

  const auto hf = h0_matrix(kWf, cfg);
  const double g = (kWf * kWf - kWi * kWi) / (4.0 * kWi);
  CHECK(hf(0, 0) == doctest::Approx(0.5 * kWi + g).epsilon(1e-14));
  CHECK(hf(0, 2) == doctest::Approx(g * std::sqrt(2.0)).epsilon(1e-14));
  CHECK(hf(3, 5) == doctest::Approx(g * std::sqrt(20.0)).epsilon(1e-14));
  CHECK(hf(0, 1) == 0.0);
  CHECK(hf(0, 4) == 0.0);
}

TEST_CASE("control Hamiltonian is Hermitian, traceless, and vanishes at the endpoints") {
  const auto cfg = basis(32);
  const auto p = short_ramp();
  const auto hc = hc_matrix(p, 0.3 * p.tau(), cfg);
  CHECK((hc - hc.adjoint()).norm() < 1e-12 * hc.norm());
  CHECK(std::abs(hc.trace()) < 1e-12);
  CHECK(hc(0, 1) == std::complex<double>(0.0, 0.0));
  const double rate = p.omega_dot_at(0.3 * p.tau()) / p.omega_at(0.3 * p.tau());
  CHECK(std::abs(hc(2, 0) - std::complex<double>(0.0, -0.25 * rate * std::sqrt(2.0))) < 1e-12 * rate);
  CHECK(hc_matrix(p, 0.0, cfg).norm() == 0.0);
  CHECK(hc_matrix(p, p.tau(), cfg).norm() == 0.0);
}

TEST_CASE("eigenbasis reproduces the oscillator ladder at a different frequency") {
  FockBasisConfig cfg = basis(200);
  const auto eb = eigenbasis(kWf, cfg);
  for (int n = 0; n < 40; ++n) {
    CHECK(std::abs(eb.energies(n) - kWf * (n + 0.5)) < 1e-8 * kWf * (n + 0.5));
  }
  for (int n = 0; n < 10; ++n) {
    const auto v = eb.vectors.col(n);
    CHECK(v.norm() == doctest::Approx(1.0).epsilon(1e-12));
    double wrong_parity = 0.0;
    for (int k = (n + 1) % 2; k < v.size(); k += 2) wrong_parity += v(k) * v(k);
    CHECK(wrong_parity < 1e-24);
  }
}

TEST_CASE("stationary state only acquires a phase") {
  const auto cfg = basis(32);
  const auto c = FrequencyProtocol::constant(kWi, 0.37);
  const auto out = propagate(QuantumState::basis_state(3, 32), c, Drive::bare, cfg);
  CHECK(std::abs(out.amplitudes(3)) == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(std::abs(out.norm() - 1.0) < 1e-10);
}

TEST_CASE("counterdiabatic driving maps eigenstates onto eigenstates") {
  const auto cfg = basis(256);
  const auto tm = transition_matrix(short_ramp(), Drive::counterdiabatic, cfg, 8, 32);
  for (std::size_t n = 0; n < 8; ++n) {
    for (std::size_t m = 0; m < 32; ++m) {
      const double expected = n == m ? 1.0 : 0.0;
      CHECK(std::abs(tm.probability(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m)) -
                     expected) < 1e-6);
    }
  }
  CHECK(tm.max_leakage < 1e-8);
}

TEST_CASE("bare ground-state row against the closed-form squeezed overlaps") {
  const auto tm = transition_matrix(short_ramp(), Drive::bare, basis(256), 1, 64);
  CHECK(std::abs(tm.probability(0, 0) - 0.9634330562277087) < 1e-9);
  CHECK(std::abs(tm.probability(0, 2) - 0.03458567929379386) < 1e-9);
  CHECK(std::abs(tm.probability(0, 4) - 0.0018623544279714513) < 1e-9);
  CHECK(tm.probability(0, 1) < 1e-20);
  CHECK(tm.probability(0, 3) < 1e-20);
  CHECK(tm.row_sum(0) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("ground-row mean energy reproduces the classical adiabaticity parameter") {
  const auto p = short_ramp();
  const auto tm = transition_matrix(p, Drive::bare, basis(256), 1, 128);
  double levels = 0.0;
  for (std::size_t m = 0; m < tm.cols(); ++m) {
    levels += tm.probability(0, static_cast<Eigen::Index>(m)) * (static_cast<double>(m) + 0.5);
  }
  CHECK(2.0 * levels == doctest::Approx(1.1547004836953767).epsilon(1e-9));
  const double q = adiabaticity_parameter(basic_solutions(p), kWi, kWf);
  CHECK(q == doctest::Approx(1.1547004836953767).epsilon(1e-12));
}

TEST_CASE("transition matrix is doubly stochastic on the reliable block") {
  const auto tm = transition_matrix(short_ramp(), Drive::bare, basis(256), 20);
  for (std::size_t n = 0; n < tm.rows(); ++n) CHECK(tm.row_sum(n) == doctest::Approx(1.0).epsilon(1e-8));
  for (Eigen::Index m = 0; m < 10; ++m) CHECK(tm.probability.col(m).sum() <= 1.0 + 1e-9);
}

TEST_CASE("truncation is detected") {
  // A slow ramp lets the squeezed state breathe into the top of a sixteen-level basis.
  const auto p = FrequencyProtocol::cosine_ramp(kWi, 40.0, 0.5);
  CHECK_THROWS_AS(transition_matrix(p, Drive::bare, basis(16), 8), TruncationError);
}

TEST_CASE("Gibbs weights and tail levels") {
  double tail = 0.0;
  const auto w = truncated_gibbs_weights(0.2, kWi, 1.0, 64, &tail);
  double sum = 0.0;
  for (double x : w) sum += x;
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(w[1] / w[0] == doctest::Approx(std::exp(-2.0)).epsilon(1e-14));
  CHECK(tail == doctest::Approx(std::exp(-2.0 * 64)).epsilon(1e-10));
  const auto n = levels_for_tail(0.2, kWi, 1.0, 1e-12);
  CHECK(std::exp(-2.0 * static_cast<double>(n)) < 1e-12);
  CHECK(std::exp(-2.0 * static_cast<double>(n - 1)) >= 1e-12);
}

TEST_CASE("quantum free energy difference") {
  const double beta = 0.2;
  const double expected =
      std::log(std::sinh(0.5 * beta * kWf) / std::sinh(0.5 * beta * kWi)) / beta;
  CHECK(delta_f_quantum(beta, kWi, kWf, 1.0) == doctest::Approx(expected).epsilon(1e-14));
  // Small hbar approaches the classical value.
  CHECK(delta_f_quantum(beta, kWi, kWf, 1e-5) ==
        doctest::Approx(delta_f_classical(beta, kWi, kWf)).epsilon(1e-6));
}

TEST_CASE("counterdiabatic atoms match the closed form") {
  const double beta = 0.2;
  const std::size_t n_max = 64;
  const auto tm = transition_matrix(short_ramp(), Drive::counterdiabatic, basis(512), n_max);
  const auto atoms = quantum_work_atoms(tm, beta, kWi, kWf, 1.0);
  const auto closed = pdf_quantum_adiabatic(beta, kWi, kWf, 1.0, n_max);
  CHECK(atoms.probability_below(0.0) < 1e-12);
  CHECK(atoms.stddev() == doctest::Approx(3.1145765147629634).epsilon(1e-9));
  CHECK(closed.stddev() == doctest::Approx(3.1145765147629634).epsilon(1e-12));
  for (const auto& a : closed.atoms) {
    if (a.probability < 1e-10) continue;
    double found = 0.0;
    for (const auto& b : atoms.atoms) {
      if (std::abs(b.work - a.work) <= 1e-9 * std::max(1.0, std::abs(a.work))) found += b.probability;
    }
    CHECK(std::abs(found - a.probability) < 1e-6);
  }
}

TEST_CASE("quantum Jarzynski equality for both drives") {
  const double beta = 0.2;
  const auto p = short_ramp();
  const double target = std::exp(-beta * delta_f_quantum(beta, kWi, kWf, 1.0));
  for (Drive d : {Drive::counterdiabatic, Drive::bare}) {
    const auto tm = transition_matrix(p, d, basis(512), 64);
    const auto atoms = quantum_work_atoms(tm, beta, kWi, kWf, 1.0);
    CHECK(atoms.total_probability() == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(std::abs(jarzynski(atoms, beta, target).estimate - target) < 1e-6);
    CHECK(atoms.mean() >= delta_f_quantum(beta, kWi, kWf, 1.0));
  }
}

TEST_CASE("transition probabilities converge with the basis size") {
  const auto p = short_ramp();
  const auto small = transition_matrix(p, Drive::bare, basis(256), 16, 64);
  const auto large = transition_matrix(p, Drive::bare, basis(512), 16, 64);
  CHECK((small.probability - large.probability).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("small hbar recovers classical bare-work moments") {
  const double beta = 0.2;
  const double hbar = 0.1;
  const auto p = FrequencyProtocol::cosine_ramp(kWi, kWf, 0.05);
  const auto n_max = levels_for_tail(beta, kWi, hbar, 1e-10);
  const auto tm = transition_matrix(p, Drive::bare, basis(1024, hbar), n_max);
  const auto atoms = quantum_work_atoms(tm, beta, kWi, kWf, hbar);
  const auto mom = moments_from_form(quadratic_form(basic_solutions(p), beta, kWi, kWf));
  CHECK(atoms.mean() == doctest::Approx(mom.mean).epsilon(0.01));
  CHECK(atoms.stddev() == doctest::Approx(mom.stddev).epsilon(0.01));
}

TEST_CASE("negative-work probability of the bare stroke") {
  // Reference: sudden-quench Hermite overlaps by Gauss-Hermite quadrature.
  const double beta = 0.2;
  const auto tm = transition_matrix(short_ramp(), Drive::bare, basis(512), 64);
  const auto atoms = quantum_work_atoms(tm, beta, kWi, kWf, 1.0);
  CHECK(atoms.probability_below(0.0) == doctest::Approx(0.0008050659991205309).epsilon(1e-5));
}
