#pragma once

#include "stasim/classical.hpp"
#include "stasim/protocol.hpp"

namespace stasim {

/// Basic solutions of q'' + omega(t)^2 q = 0 at t = tau, started from
/// (C, C') = (1, 0) and (S, S') = (0, 1).
struct BasicSolutions {
  double c = 1.0;
  double c_dot = 0.0;
  double s = 0.0;
  double s_dot = 1.0;

  double wronskian() const noexcept { return c * s_dot - c_dot * s; }
};

/// Work as a quadratic form in the scaled initial coordinates
/// p' = sqrt(beta/2m) p0, q' = sqrt(beta m omega_i^2 / 2) q0:
///   W = K p'^2 + L q'^2 + 2 M p' q' = mu_plus x^2 + mu_minus y^2.
struct QuadraticWorkForm {
  double k = 0.0;
  double l = 0.0;
  double m = 0.0;
  double mu_plus = 0.0;
  double mu_minus = 0.0;
};

struct WorkMoments {
  double mean;
  double stddev;
};

inline constexpr double kBasicSolutionTolerance = 1e-12;
inline constexpr double kWronskianTolerance = 1e-9;
/// Below this ratio mu_minus / mu_plus the sudden-limit density is used.
inline constexpr double kDegenerateFormRatio = 1e-9;

/// Throws IntegrationError on integration failure or a Wronskian drift above 1e-9.
BasicSolutions basic_solutions(const FrequencyProtocol& protocol,
                               double tol = kBasicSolutionTolerance);

QuadraticWorkForm quadratic_form(const BasicSolutions& basic, double beta, double omega_i,
                                 double omega_f);

/// Evaluates the quadratic form at an initial phase-space point.
double quadratic_form_work(const QuadraticWorkForm& form, PhaseState initial, double beta,
                           double omega_i, const OscillatorParams& params);

/// Exponential density of W = (omega_f - omega_i) I for a Gibbs initial ensemble.
double pdf_adiabatic(double work, double beta, double omega_i, double omega_f);

/// Density of mu_plus x^2 + mu_minus y^2 with x, y ~ N(0, 1/2).
/// Throws std::invalid_argument when mu_plus <= 0 or mu_minus < 0.
double pdf_nonadiabatic(double work, const QuadraticWorkForm& form);

/// Sudden-limit density; returns +infinity at W = 0.
double pdf_sudden(double work, double beta, double omega_i, double omega_f);

WorkMoments moments_from_form(const QuadraticWorkForm& form);

/// Modified Bessel function of the first kind, order zero, for x >= 0.
double bessel_i0(double x);
/// exp(-x) I0(x); finite for all x >= 0.
double bessel_i0_scaled(double x);

}  // namespace stasim
