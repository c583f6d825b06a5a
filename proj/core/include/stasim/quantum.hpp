#pragma once

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

#include "stasim/analytics.hpp"
#include "stasim/classical.hpp"
#include "stasim/protocol.hpp"

namespace stasim {

/// Truncated ladder basis of a reference oscillator with frequency omega_ref.
struct FockBasisConfig {
  std::size_t dimension = 512;
  double omega_ref = 1.0;
  double mass = 1.0;
  double hbar = 1.0;

  /// Throws std::invalid_argument unless N >= 4, N even, omega_ref > 0, hbar > 0.
  void validate() const;
};

/// Norm leaking into the top 10% of the basis above this is a truncation failure.
inline constexpr double kLeakageThreshold = 1e-8;
inline constexpr double kQuantumTolerance = 1e-12;

class TruncationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct QuantumState {
  Eigen::VectorXcd amplitudes;

  double norm() const { return amplitudes.norm(); }
  /// Squared weight on the top 10% of basis indices.
  double leakage() const;

  static QuantumState basis_state(std::size_t n, std::size_t dimension);
};

/// H0(omega) in the omega_ref ladder basis; couples n with n and n +- 2 only.
Eigen::MatrixXd h0_matrix(double omega, const FockBasisConfig& cfg);

/// H_C(t) = -(omega_dot / 4 omega) i hbar (a^dag^2 - a^2).
Eigen::MatrixXcd hc_matrix(const FrequencyProtocol& protocol, double t, const FockBasisConfig& cfg);

struct Eigenbasis {
  Eigen::VectorXd energies;  // ascending
  Eigen::MatrixXd vectors;   // columns; each has definite parity
};

/// Diagonalizes h0_matrix(omega) block by block in parity.
Eigenbasis eigenbasis(double omega, const FockBasisConfig& cfg);

/// Solves the Schroedinger equation over [0, tau]. Throws TruncationError when
/// the final leakage exceeds kLeakageThreshold.
QuantumState propagate(const QuantumState& initial, const FrequencyProtocol& protocol, Drive drive,
                       const FockBasisConfig& cfg, double tol = kQuantumTolerance);

/// Propagates every column of `initial` (N x k) together.
Eigen::MatrixXcd propagate_columns(const Eigen::MatrixXcd& initial,
                                   const FrequencyProtocol& protocol, Drive drive,
                                   const FockBasisConfig& cfg, double tol = kQuantumTolerance);

/// Two-time-measurement transition probabilities P(n -> m) between the
/// eigenstates of H0(omega_i) and H0(omega_f). Rows n < n_max, columns m < m_max.
struct TransitionMatrix {
  Eigen::MatrixXd probability;
  double omega_i = 0.0;
  double omega_f = 0.0;
  double tau = 0.0;
  Drive drive = Drive::bare;
  double max_leakage = 0.0;

  std::size_t rows() const { return static_cast<std::size_t>(probability.rows()); }
  std::size_t cols() const { return static_cast<std::size_t>(probability.cols()); }
  double row_sum(std::size_t n) const { return probability.row(static_cast<Eigen::Index>(n)).sum(); }
};

/// `m_max == 0` selects dimension / 2 (the range where the numerical spectrum is reliable).
TransitionMatrix transition_matrix(const FrequencyProtocol& protocol, Drive drive,
                                   const FockBasisConfig& cfg, std::size_t n_max,
                                   std::size_t m_max = 0, double tol = kQuantumTolerance);

struct WorkAtom {
  double work;
  double probability;
};

/// Discrete work distribution sorted by work.
struct QuantumWorkAtoms {
  std::vector<WorkAtom> atoms;
  /// Gibbs weight of initial levels not represented (before renormalization).
  double discarded_tail = 0.0;

  double total_probability() const;
  double probability_below(double work) const;
  double mean() const;
  double stddev() const;
};

/// Relative work distance below which atoms are merged.
inline constexpr double kAtomMergeTolerance = 1e-9;

/// Initial Gibbs weights over the truncated set of levels n < count, renormalized.
std::vector<double> truncated_gibbs_weights(double beta, double omega, double hbar,
                                            std::size_t count, double* discarded_tail = nullptr);

QuantumWorkAtoms quantum_work_atoms(const TransitionMatrix& tm, double beta, double omega_i,
                                    double omega_f, double hbar);

/// Closed-form atoms for adiabatic or counterdiabatic strokes.
QuantumWorkAtoms pdf_quantum_adiabatic(double beta, double omega_i, double omega_f, double hbar,
                                       std::size_t n_max);

/// Smallest level count whose discarded geometric tail is below `tail`.
std::size_t levels_for_tail(double beta, double omega, double hbar, double tail);

/// (1/beta) ln[sinh(beta hbar omega_f / 2) / sinh(beta hbar omega_i / 2)].
double delta_f_quantum(double beta, double omega_i, double omega_f, double hbar);

/// Mean-energy magnification Q* of a bare stroke (m = 1).
double adiabaticity_parameter(const BasicSolutions& basic, double omega_i, double omega_f);

}  // namespace stasim
