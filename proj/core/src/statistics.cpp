#include "stasim/statistics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace stasim {

WorkSummary summary(std::span<const double> samples) {
  if (samples.empty()) throw std::invalid_argument("summary of an empty sample set");
  const auto n = static_cast<double>(samples.size());
  double mean = 0.0;
  for (double w : samples) mean += w;
  mean /= n;
  double m2 = 0.0;
  double m4 = 0.0;
  for (double w : samples) {
    const double d = (w - mean) * (w - mean);
    m2 += d;
    m4 += d * d;
  }
  WorkSummary s;
  s.count = samples.size();
  s.mean = mean;
  if (samples.size() < 2) return s;
  const double var = m2 / (n - 1.0);
  s.stddev = std::sqrt(var);
  s.mean_stderr = s.stddev / std::sqrt(n);
  const double pop_var = m2 / n;
  const double kurt_term = std::max(m4 / n - pop_var * pop_var, 0.0);
  s.stddev_stderr = s.stddev > 0.0 ? std::sqrt(kurt_term / n) / (2.0 * s.stddev) : 0.0;
  return s;
}

double Histogram::area() const {
  double a = 0.0;
  for (double d : density) a += d * width;
  return a;
}

std::size_t default_bin_count(std::size_t samples) {
  return static_cast<std::size_t>(std::ceil(2.0 * std::cbrt(static_cast<double>(samples))));
}

Histogram histogram(std::span<const double> samples, const BinSpec& spec) {
  if (samples.empty()) throw std::invalid_argument("histogram of an empty sample set");
  const auto [lo_it, hi_it] = std::minmax_element(samples.begin(), samples.end());
  double lower = spec.lower.value_or(*lo_it);
  double upper = spec.upper.value_or(*hi_it);
  if (!spec.lower && !spec.upper && lower == upper) {
    lower -= 0.5;
    upper += 0.5;
  }
  const std::size_t bins = spec.bins.value_or(default_bin_count(samples.size()));
  if (bins == 0) throw std::invalid_argument("histogram needs at least one bin");
  const double width = (upper - lower) / static_cast<double>(bins);
  if (!(width > 0.0)) throw std::invalid_argument("histogram bin width must be positive");

  Histogram h;
  h.lower = lower;
  h.width = width;
  h.density.assign(bins, 0.0);
  std::size_t kept = 0;
  for (double w : samples) {
    if (w < lower || w > upper) continue;
    auto i = static_cast<std::size_t>((w - lower) / width);
    if (i >= bins) i = bins - 1;
    h.density[i] += 1.0;
    ++kept;
  }
  if (kept > 0) {
    for (auto& d : h.density) d /= static_cast<double>(kept) * width;
  }
  return h;
}

JarzynskiTrace jarzynski(std::span<const double> samples, double beta, double target) {
  if (!(beta > 0.0)) throw std::invalid_argument("beta must be positive");
  if (samples.empty()) throw std::invalid_argument("Jarzynski estimate of an empty sample set");
  JarzynskiTrace trace;
  trace.target = target;
  trace.running.reserve(samples.size());
  double sum = 0.0;
  double sum_sq = 0.0;
  for (std::size_t k = 0; k < samples.size(); ++k) {
    const double e = std::exp(-beta * samples[k]);
    sum += e;
    sum_sq += e * e;
    trace.running.push_back(sum / static_cast<double>(k + 1));
  }
  const auto n = static_cast<double>(samples.size());
  trace.estimate = sum / n;
  if (samples.size() > 1) {
    const double var = std::max(sum_sq / n - trace.estimate * trace.estimate, 0.0) * n / (n - 1.0);
    trace.estimate_stderr = std::sqrt(var / n);
  }
  return trace;
}

JarzynskiTrace jarzynski(const QuantumWorkAtoms& atoms, double beta, double target) {
  if (!(beta > 0.0)) throw std::invalid_argument("beta must be positive");
  JarzynskiTrace trace;
  trace.target = target;
  double sum = 0.0;
  for (const auto& a : atoms.atoms) {
    sum += a.probability * std::exp(-beta * a.work);
    trace.running.push_back(sum);
  }
  trace.estimate = sum;
  return trace;
}

double delta_f_classical(double beta, double omega_i, double omega_f) {
  if (!(beta > 0.0) || !(omega_i > 0.0) || !(omega_f > 0.0)) {
    throw std::invalid_argument("free energy needs positive parameters");
  }
  return std::log(omega_f / omega_i) / beta;
}

double dissipated_work(std::span<const double> samples, double delta_f) {
  return summary(samples).mean - delta_f;
}

double dissipated_work(const QuantumWorkAtoms& atoms, double delta_f) {
  return atoms.mean() - delta_f;
}

AnalyticCdf::AnalyticCdf(std::function<double(double)> density) : density_(std::move(density)) {}

namespace {

// Boost reports the error of the rule mapped onto [-1, 1]; scale it back to
// [a, b] before comparing, otherwise short intervals always bisect to full depth.
template <class F>
double adaptive_gk(const F& f, double a, double b, unsigned depth) {
  using boost::math::quadrature::gauss_kronrod;
  double err = 0.0;
  const double r = gauss_kronrod<double, 15>::integrate(f, a, b, 0, 0.0, &err);
  const double scaled_err = err * 0.5 * (b - a);
  if (depth == 0 || scaled_err <= kCdfTolerance * std::abs(r)) return r;
  const double mid = 0.5 * (a + b);
  return adaptive_gk(f, a, mid, depth - 1) + adaptive_gk(f, mid, b, depth - 1);
}

}  // namespace

double AnalyticCdf::integral(double a, double b) const {
  if (!(a >= 0.0) || !(b >= a)) throw std::invalid_argument("integration bounds must satisfy 0 <= a <= b");
  if (a == b) return 0.0;
  auto integrand = [this](double u) { return 2.0 * u * density_(u * u); };
  return adaptive_gk(integrand, std::sqrt(a), std::sqrt(b), kCdfMaxDepth);
}

double AnalyticCdf::operator()(double work) const {
  if (work <= 0.0) return 0.0;
  if (std::isinf(work)) {
    auto integrand = [this](double u) { return 2.0 * u * density_(u * u); };
    using boost::math::quadrature::gauss_kronrod;
    return gauss_kronrod<double, 15>::integrate(
        integrand, 0.0, std::numeric_limits<double>::infinity(), kCdfMaxDepth, kCdfTolerance);
  }
  return integral(0.0, work);
}

double ks_distance(std::span<const double> samples, const AnalyticCdf& cdf) {
  if (samples.empty()) throw std::invalid_argument("KS distance of an empty sample set");
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const auto n = static_cast<double>(sorted.size());
  double distance = 0.0;
  double f = 0.0;
  double prev = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double x = std::max(sorted[i], 0.0);
    f += cdf.integral(prev, x);
    prev = x;
    const double below = static_cast<double>(i) / n;
    const double above = static_cast<double>(i + 1) / n;
    distance = std::max({distance, std::abs(f - below), std::abs(above - f)});
  }
  return distance;
}

double ks_distance(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("KS distance of an empty sample set");
  std::vector<double> x(a.begin(), a.end());
  std::vector<double> y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  std::size_t i = 0;
  std::size_t j = 0;
  double distance = 0.0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] == v) ++i;
    while (j < y.size() && y[j] == v) ++j;
    const double fx = static_cast<double>(i) / static_cast<double>(x.size());
    const double fy = static_cast<double>(j) / static_cast<double>(y.size());
    distance = std::max(distance, std::abs(fx - fy));
  }
  return distance;
}

double estimator_dispersion(std::span<const double> samples, double beta, std::size_t batches) {
  if (!(beta > 0.0)) throw std::invalid_argument("beta must be positive");
  if (batches < 2) throw std::invalid_argument("estimator dispersion needs at least two batches");
  const std::size_t size = samples.size() / batches;
  if (size == 0) throw std::invalid_argument("fewer samples than batches");
  std::vector<double> means(batches, 0.0);
  for (std::size_t b = 0; b < batches; ++b) {
    double s = 0.0;
    for (std::size_t k = 0; k < size; ++k) s += std::exp(-beta * samples[b * size + k]);
    means[b] = s / static_cast<double>(size);
  }
  double mean = 0.0;
  for (double m : means) mean += m;
  mean /= static_cast<double>(batches);
  double var = 0.0;
  for (double m : means) var += (m - mean) * (m - mean);
  return var / static_cast<double>(batches - 1);
}

}  // namespace stasim
