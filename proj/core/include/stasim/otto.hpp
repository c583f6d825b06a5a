#pragma once

#include <optional>
#include <span>
#include <vector>

namespace stasim {

enum class Regime { classical, quantum };

struct PhysicalConstants {
  double mass = 1.0;
  double hbar = 1.0;
};

/// How a frequency-changing stroke maps mean energies.
struct StrokeKind {
  enum class Type { sta, quasistatic, sudden, bare };

  Type type = Type::sta;
  /// Stroke duration. Used for the cycle-duration record, and as the
  /// cosine-ramp duration of a bare stroke.
  double duration = 0.0;

  static StrokeKind sta(double duration = 0.0) { return {Type::sta, duration}; }
  static StrokeKind quasistatic(double duration = 0.0) { return {Type::quasistatic, duration}; }
  static StrokeKind sudden() { return {Type::sudden, 0.0}; }
  static StrokeKind bare(double duration) { return {Type::bare, duration}; }
};

struct OttoCycleSpec {
  /// Cold bath (step 4), beta_cold >= beta_hot.
  double beta_cold = 1.0;
  /// Hot bath (step 2).
  double beta_hot = 0.5;
  double omega_i = 1.0;
  /// Unset means "optimize".
  std::optional<double> omega_f;
  Regime regime = Regime::classical;
  StrokeKind compression = StrokeKind::sta();  // step 1, omega_i -> omega_f
  StrokeKind expansion = StrokeKind::sta();    // step 3, omega_f -> omega_i
  PhysicalConstants constants;
  double relaxation_hot = 0.0;
  double relaxation_cold = 0.0;
  /// Fock basis size for quantum bare strokes.
  std::size_t quantum_dimension = 256;
};

struct CycleResult {
  double omega_f = 0.0;
  /// Mean energies at A (thermal, cold, omega_i), B (after step 1),
  /// C (thermal, hot, omega_f), D (after step 3).
  double energy_a = 0.0;
  double energy_b = 0.0;
  double energy_c = 0.0;
  double energy_d = 0.0;
  double work_compression = 0.0;  // W1, done on the medium
  double work_expansion = 0.0;    // W3, done on the medium
  double w_net = 0.0;             // output, -(W1 + W3)
  double q_hot = 0.0;
  double q_cold = 0.0;            // signed, into the medium
  double efficiency = 0.0;
  bool feasible = false;
  double cycle_duration = 0.0;
  /// w_net / cycle_duration; 0 when the duration is not positive.
  double power = 0.0;
};

/// Classical: 1/beta. Quantum: (hbar omega / 2) coth(beta hbar omega / 2).
double thermal_energy(double beta, double omega, Regime regime, const PhysicalConstants& constants);

/// Mean-energy magnification <H>_after / <H>_before of a stroke started in a
/// thermal state: Q* omega_to / omega_from. For a quantum bare stroke Q* is read
/// off the ground-state row of the transition matrix.
double stroke_energy_factor(const StrokeKind& kind, double omega_from, double omega_to,
                            Regime regime = Regime::classical,
                            const PhysicalConstants& constants = {},
                            std::size_t quantum_dimension = 256);

/// Requires a fixed omega_f. Infeasible cycles are flagged, not thrown.
CycleResult evaluate_cycle(const OttoCycleSpec& spec);

struct OptimizationResult {
  double omega_f = 0.0;
  CycleResult cycle;
  /// The maximum of w_net sits on the bracket boundary.
  bool at_boundary = false;
};

/// Maximizes w_net over omega_f in [lower, upper] (default bracket when unset).
OptimizationResult optimize_frequency(const OttoCycleSpec& spec,
                                      std::optional<double> lower = std::nullopt,
                                      std::optional<double> upper = std::nullopt);

/// 1 - sqrt(beta_hot / beta_cold).
double eta_adiabatic_classical(double beta_hot_over_cold);
/// (1 - s) / (2 + s), s = sqrt(beta_hot / beta_cold).
double eta_sudden_classical(double beta_hot_over_cold);

struct EfficiencyPoint {
  double beta_ratio = 1.0;  // beta_cold / beta_hot
  double eta_sta = 0.0;
  double eta_sudden = 0.0;
  double eta_adiabatic_closed_form = 0.0;
  double eta_sudden_closed_form = 0.0;
};

/// Efficiency at maximum work over a grid of beta_cold / beta_hot ratios.
std::vector<EfficiencyPoint> efficiency_curves(Regime regime, double beta_cold, double omega_i,
                                               std::span<const double> ratios,
                                               const PhysicalConstants& constants);

}  // namespace stasim
