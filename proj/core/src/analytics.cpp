#include "stasim/analytics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "stasim/detail/adaptive.hpp"

namespace stasim {

namespace {

void check_increasing(double beta, double omega_i, double omega_f) {
  if (!(beta > 0.0)) throw std::invalid_argument("beta must be positive");
  if (!(omega_i > 0.0)) throw std::invalid_argument("omega_i must be positive");
  if (!(omega_f > omega_i)) {
    throw std::domain_error("closed-form work densities require omega_f > omega_i");
  }
}

// Power series sum_k (x/2)^{2k} / (k!)^2; all terms positive.
double i0_series(double x) {
  const double y = 0.25 * x * x;
  double term = 1.0;
  double sum = 1.0;
  for (int k = 1; k < 500; ++k) {
    term *= y / (static_cast<double>(k) * k);
    sum += term;
    if (term < sum * 1e-17) break;
  }
  return sum;
}

// Large-x expansion of exp(-x) I0(x) = (2 pi x)^{-1/2} sum_k a_k,
// a_k = a_{k-1} (2k-1)^2 / (8 k x). Truncated at the smallest term.
double i0_scaled_asymptotic(double x) {
  double term = 1.0;
  double sum = 1.0;
  for (int k = 1; k < 200; ++k) {
    const double next = term * (2.0 * k - 1.0) * (2.0 * k - 1.0) / (8.0 * k * x);
    if (next >= term) break;
    term = next;
    sum += term;
    if (term < sum * 1e-17) break;
  }
  return sum / std::sqrt(2.0 * std::numbers::pi * x);
}

constexpr double kSeriesLimit = 20.0;

}  // namespace

double bessel_i0(double x) {
  x = std::abs(x);
  if (x <= kSeriesLimit) return i0_series(x);
  return std::exp(x + std::log(i0_scaled_asymptotic(x)));
}

double bessel_i0_scaled(double x) {
  x = std::abs(x);
  if (x <= kSeriesLimit) return std::exp(-x) * i0_series(x);
  return i0_scaled_asymptotic(x);
}

BasicSolutions basic_solutions(const FrequencyProtocol& protocol, double tol) {
  // State (C, C'/w0, S w0, S') keeps all components O(1).
  using Vec4 = std::array<double, 4>;
  const double w0 = protocol.omega_i();
  auto rhs = [&](const Vec4& x, Vec4& dxdt, double t) {
    const double w = protocol.omega_at(std::clamp(t, 0.0, protocol.tau()));
    const double w2 = w * w;
    dxdt[0] = w0 * x[1];
    dxdt[1] = -w2 * x[0] / w0;
    dxdt[2] = w0 * x[3];
    dxdt[3] = -w2 * x[2] / w0;
  };
  Vec4 x{1.0, 0.0, 0.0, 1.0};
  detail::integrate_to<IntegrationError>(rhs, x, protocol.tau(), tol, tol, detail::NoObserver{});

  BasicSolutions out{x[0], x[1] * w0, x[2] / w0, x[3]};
  const double drift = std::abs(out.wronskian() - 1.0);
  if (!(drift < kWronskianTolerance)) {
    std::ostringstream os;
    os << "basic solutions violate the Wronskian identity by " << drift;
    throw IntegrationError(os.str());
  }
  return out;
}

QuadraticWorkForm quadratic_form(const BasicSolutions& b, double beta, double omega_i,
                                 double omega_f) {
  if (!(beta > 0.0)) throw std::invalid_argument("beta must be positive");
  if (!(omega_i > 0.0) || !(omega_f > 0.0)) {
    throw std::invalid_argument("frequencies must be positive");
  }
  const double wf2 = omega_f * omega_f;
  const double wi2 = omega_i * omega_i;
  QuadraticWorkForm f;
  f.k = (b.s_dot * b.s_dot + wf2 * b.s * b.s - 1.0) / beta;
  f.l = (b.c_dot * b.c_dot / wi2 + wf2 * b.c * b.c / wi2 - 1.0) / beta;
  f.m = (b.c_dot * b.s_dot + wf2 * b.c * b.s) / (beta * omega_i);

  const double trace = f.k + f.l;
  const double disc = std::sqrt((f.k - f.l) * (f.k - f.l) + 4.0 * f.m * f.m);
  f.mu_plus = 0.5 * (trace + disc);
  // det / mu_plus avoids cancellation when mu_minus << mu_plus.
  const double det = f.k * f.l - f.m * f.m;
  f.mu_minus = f.mu_plus > 0.0 ? det / f.mu_plus : 0.5 * (trace - disc);
  return f;
}

double quadratic_form_work(const QuadraticWorkForm& form, PhaseState initial, double beta,
                           double omega_i, const OscillatorParams& params) {
  const double m = params.mass;
  const double p_scaled = std::sqrt(beta / (2.0 * m)) * initial.p;
  const double q_scaled = std::sqrt(beta * m * omega_i * omega_i / 2.0) * initial.q;
  return form.k * p_scaled * p_scaled + form.l * q_scaled * q_scaled +
         2.0 * form.m * p_scaled * q_scaled;
}

double pdf_adiabatic(double work, double beta, double omega_i, double omega_f) {
  check_increasing(beta, omega_i, omega_f);
  if (work < 0.0) return 0.0;
  const double rate = omega_i * beta / (omega_f - omega_i);
  return rate * std::exp(-rate * work);
}

double pdf_nonadiabatic(double work, const QuadraticWorkForm& form) {
  const double mp = form.mu_plus;
  if (!(mp > 0.0)) throw std::invalid_argument("work form requires mu_plus > 0");
  if (form.mu_minus < -1e-12 * mp) {
    throw std::invalid_argument("work form requires mu_minus >= 0 (monotone increasing omega)");
  }
  if (work < 0.0) return 0.0;
  const double mm = std::max(form.mu_minus, 0.0);
  if (mm < kDegenerateFormRatio * mp) {
    if (work == 0.0) return std::numeric_limits<double>::infinity();
    return std::exp(-work / mp) / std::sqrt(std::numbers::pi * mp * work);
  }
  // exp(-(mp+mm) W / 2 mp mm) I0(z) = exp(-W / mp) * exp(-z) I0(z)
  const double z = (mp - mm) * work / (2.0 * mp * mm);
  return std::exp(-work / mp) * bessel_i0_scaled(z) / std::sqrt(mp * mm);
}

double pdf_sudden(double work, double beta, double omega_i, double omega_f) {
  check_increasing(beta, omega_i, omega_f);
  if (work < 0.0) return 0.0;
  if (work == 0.0) return std::numeric_limits<double>::infinity();
  const double rate = beta * omega_i * omega_i / (omega_f * omega_f - omega_i * omega_i);
  return std::sqrt(rate / (std::numbers::pi * work)) * std::exp(-rate * work);
}

WorkMoments moments_from_form(const QuadraticWorkForm& form) {
  const double mp = form.mu_plus;
  const double mm = form.mu_minus;
  return {0.5 * (mp + mm), std::sqrt(0.5 * (mp * mp + mm * mm))};
}

}  // namespace stasim
