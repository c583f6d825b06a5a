#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>

namespace stasim {

struct GoldenResult {
  double x;
  double value;
  std::size_t iterations;
};

/// Golden-section search for the maximum of a unimodal f on [a, b].
/// Stops when the bracket is below rel_tol * |x| (or rel_tol when x is near 0).
template <class F>
GoldenResult golden_section_maximize(F&& f, double a, double b, double rel_tol = 1e-8,
                                     std::size_t max_iterations = 500) {
  if (!(b > a)) throw std::invalid_argument("golden section needs a < b");
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c);
  double fd = f(d);
  std::size_t it = 0;
  for (; it < max_iterations; ++it) {
    const double mid = 0.5 * (a + b);
    if (b - a <= rel_tol * std::max(std::abs(mid), 1.0)) break;
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  const double x = fc >= fd ? c : d;
  return {x, fc >= fd ? fc : fd, it};
}

}  // namespace stasim
