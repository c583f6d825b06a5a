#include <cmath>
#include <numbers>

#include <boost/math/special_functions/bessel.hpp>

#include "doctest.h"

#include "stasim/analytics.hpp"
#include "stasim/classical.hpp"
#include "stasim/statistics.hpp"

using namespace stasim;

namespace {

const double kWi = 10.0;
const double kWf = 10.0 * std::numbers::sqrt3;
const double kBeta = 0.2;

bool rel_close(double a, double b, double tol) {
  return std::abs(a - b) <= tol * std::max(std::abs(a), std::abs(b));
}

double trapezoid(auto f, double a, double b, std::size_t n) {
  const double h = (b - a) / static_cast<double>(n);
  double s = 0.5 * (f(a) + f(b));
  for (std::size_t k = 1; k < n; ++k) s += f(a + h * static_cast<double>(k));
  return s * h;
}

}  // namespace

TEST_CASE("basic solutions of a constant oscillator") {
  for (double tau : {0.01, 0.3, 2.0}) {
    const double w = 3.0;
    const auto b = basic_solutions(FrequencyProtocol::constant(w, tau));
    CHECK(b.c == doctest::Approx(std::cos(w * tau)).epsilon(1e-10));
    CHECK(b.c_dot == doctest::Approx(-w * std::sin(w * tau)).epsilon(1e-10));
    CHECK(b.s == doctest::Approx(std::sin(w * tau) / w).epsilon(1e-10));
    CHECK(b.s_dot == doctest::Approx(std::cos(w * tau)).epsilon(1e-10));
    CHECK(std::abs(b.wronskian() - 1.0) < 1e-10);
  }
}

TEST_CASE("basic solutions of the short cosine ramp") {
  const auto b = basic_solutions(FrequencyProtocol::cosine_ramp(kWi, kWf, 1e-4));
  CHECK(rel_close(b.c, 0.9999992026424909, 1e-10));
  CHECK(rel_close(b.c_dot, -0.019999993839939837124, 1e-12));
  CHECK(rel_close(b.s, 9.999996666666994e-05, 1e-10));
  CHECK(rel_close(b.s_dot, 0.9999987973578328, 1e-10));
  CHECK(std::abs(b.wronskian() - 1.0) < 1e-9);
}

TEST_CASE("quadratic form of the short cosine ramp") {
  const auto b = basic_solutions(FrequencyProtocol::cosine_ramp(kWi, kWf, 1e-4));
  const auto form = quadratic_form(b, kBeta, kWi, kWf);
  CHECK(rel_close(form.mu_plus, 9.999998579271185, 1e-9));
  CHECK(std::abs(form.mu_minus - 4.7357631678054191507e-7) < 1e-13);
  CHECK(form.mu_minus >= 0.0);
  const auto mom = moments_from_form(form);
  CHECK(rel_close(mom.mean, 4.99999952642375, 1e-9));
  CHECK(rel_close(mom.stddev, 7.071066807258505, 1e-9));
}

TEST_CASE("sudden quench quadratic form") {
  const BasicSolutions sudden{};
  const auto form = quadratic_form(sudden, kBeta, kWi, kWf);
  CHECK(form.k == doctest::Approx(0.0));
  CHECK(form.m == doctest::Approx(0.0));
  CHECK(form.l == doctest::Approx(10.0).epsilon(1e-14));
  CHECK(form.mu_plus == doctest::Approx(10.0).epsilon(1e-14));
  CHECK(form.mu_minus == doctest::Approx(0.0));
  const auto mom = moments_from_form(form);
  CHECK(mom.mean == doctest::Approx(5.0).epsilon(1e-14));
  CHECK(mom.stddev == doctest::Approx(std::sqrt(50.0)).epsilon(1e-14));
}

TEST_CASE("quadratic form with a heavier mass matches direct trajectories") {
  const auto p = FrequencyProtocol::cosine_ramp(2.0, 3.0, 0.4);
  const OscillatorParams params{2.5};
  const auto form = quadratic_form(basic_solutions(p), 0.7, 2.0, 3.0);
  for (std::size_t i = 0; i < 50; ++i) {
    const auto s0 = gibbs_sample(41, i, 0.7, 2.0, params);
    const double direct = trajectory_work(s0, integrate(s0, p, Drive::bare, params), p, params);
    const double via_form = quadratic_form_work(form, s0, 0.7, 2.0, params);
    CHECK(std::abs(direct - via_form) <= 1e-8 * std::max(1.0, std::abs(direct)));
  }
}

TEST_CASE("adiabatic density") {
  const double a = kBeta / (kWf / kWi - 1.0);
  CHECK(rel_close(pdf_adiabatic(0.0, kBeta, kWi, kWf), 0.2732050807568878, 1e-14));
  CHECK(rel_close(pdf_adiabatic(3.0, kBeta, kWi, kWf), a * std::exp(-a * 3.0), 1e-14));
  CHECK(pdf_adiabatic(-1.0, kBeta, kWi, kWf) == 0.0);
  const double area = trapezoid([](double w) { return pdf_adiabatic(w, kBeta, kWi, kWf); }, 0.0, 200.0, 200000);
  CHECK(area == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("non-adiabatic density at a reference point") {
  QuadraticWorkForm form;
  form.mu_plus = 3.0;
  form.mu_minus = 1.0;
  CHECK(rel_close(pdf_nonadiabatic(2.0, form), 0.16957319802690567951, 1e-13));
  CHECK(pdf_nonadiabatic(-0.5, form) == 0.0);
}

TEST_CASE("non-adiabatic density rejects invalid forms") {
  QuadraticWorkForm form;
  form.mu_plus = 0.0;
  form.mu_minus = 0.0;
  CHECK_THROWS_AS(pdf_nonadiabatic(1.0, form), std::invalid_argument);
  form.mu_plus = 1.0;
  form.mu_minus = -0.1;
  CHECK_THROWS_AS(pdf_nonadiabatic(1.0, form), std::invalid_argument);
}

TEST_CASE("sudden density") {
  CHECK(rel_close(pdf_sudden(2.0, kBeta, kWi, kWf), 0.10328830949345566406, 1e-13));
  CHECK(std::isinf(pdf_sudden(0.0, kBeta, kWi, kWf)));
  CHECK(pdf_sudden(-1.0, kBeta, kWi, kWf) == 0.0);
}

TEST_CASE("densities integrate to one") {
  const auto form = quadratic_form(basic_solutions(FrequencyProtocol::cosine_ramp(kWi, kWf, 0.05)),
                                   kBeta, kWi, kWf);
  const AnalyticCdf non([&](double w) { return pdf_nonadiabatic(w, form); });
  const AnalyticCdf sud([](double w) { return pdf_sudden(w, kBeta, kWi, kWf); });
  const AnalyticCdf ad([](double w) { return pdf_adiabatic(w, kBeta, kWi, kWf); });
  const double inf = std::numeric_limits<double>::infinity();
  CHECK(std::abs(non(inf) - 1.0) < 1e-6);
  CHECK(std::abs(sud(inf) - 1.0) < 1e-6);
  CHECK(std::abs(ad(inf) - 1.0) < 1e-6);
}

TEST_CASE("non-adiabatic density approaches both limits") {
  // Nearly degenerate form: close to the exponential shape.
  QuadraticWorkForm iso;
  iso.mu_plus = 2.0;
  iso.mu_minus = 2.0 * (1.0 - 1e-7);
  for (double w : {0.1, 1.0, 5.0}) {
    CHECK(rel_close(pdf_nonadiabatic(w, iso), 0.5 * std::exp(-w / 2.0), 1e-6));
  }
  // Strongly anisotropic form: close to the sudden shape away from zero.
  QuadraticWorkForm thin;
  thin.mu_plus = 10.0;
  thin.mu_minus = 1e-9;
  CHECK(rel_close(pdf_nonadiabatic(2.0, thin), 0.10328830949345566406, 1e-4));
}

TEST_CASE("mean and deviation are ordered by adiabaticity") {
  const double sudden_sigma = std::sqrt(50.0);
  const double adiabatic_sigma = (kWf - kWi) / (kWi * kBeta);
  double prev = sudden_sigma + 1e-9;
  for (double tau : {1e-4, 0.01, 0.1, 0.3}) {
    const auto form = quadratic_form(basic_solutions(FrequencyProtocol::cosine_ramp(kWi, kWf, tau)),
                                     kBeta, kWi, kWf);
    const auto mom = moments_from_form(form);
    CHECK(mom.stddev <= sudden_sigma + 1e-9);
    CHECK(mom.stddev >= adiabatic_sigma - 1e-9);
    CHECK(mom.mean >= (kWf - kWi) / (kWi * kBeta) - 1e-9);
    CHECK(mom.stddev <= prev + 1e-6);
    prev = mom.stddev;
  }
}

TEST_CASE("Bessel I0 against reference values") {
  CHECK(rel_close(bessel_i0(0.0), 1.0, 1e-15));
  CHECK(rel_close(bessel_i0(1.0), 1.2660658777520083356, 1e-14));
  CHECK(rel_close(bessel_i0(25.0), 5774560606.4663103158, 1e-14));
  CHECK(rel_close(bessel_i0_scaled(50.0), 0.05656162664745419253, 1e-14));
  CHECK(rel_close(bessel_i0_scaled(700.0), 0.015081295651531357587, 1e-14));
  CHECK(std::isfinite(bessel_i0_scaled(1e6)));
}

TEST_CASE("Bessel I0 agrees with Boost across the range") {
  for (double x = 0.0; x <= 600.0; x += 0.37) {
    const double ref = boost::math::cyl_bessel_i(0, x);
    CHECK(rel_close(bessel_i0(x), ref, 1e-13));
    CHECK(rel_close(bessel_i0_scaled(x), std::exp(-x) * ref, 1e-13));
  }
}
