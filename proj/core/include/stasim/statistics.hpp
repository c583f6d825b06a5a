#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stasim/classical.hpp"
#include "stasim/quantum.hpp"

namespace stasim {

struct Provenance {
  std::string protocol;
  Drive drive = Drive::bare;
  std::uint64_t seed = 0;
};

struct WorkSampleSet {
  std::vector<double> samples;
  Provenance provenance;
};

struct WorkSummary {
  std::size_t count = 0;
  double mean = 0.0;
  double stddev = 0.0;
  double mean_stderr = 0.0;
  /// Large-sample standard error of the standard deviation (uses the fourth moment).
  double stddev_stderr = 0.0;
};

/// Throws std::invalid_argument for an empty sample set.
WorkSummary summary(std::span<const double> samples);

struct BinSpec {
  /// Default: ceil(2 * cbrt(n)).
  std::optional<std::size_t> bins;
  std::optional<double> lower;
  std::optional<double> upper;
};

struct Histogram {
  double lower = 0.0;
  double width = 1.0;
  std::vector<double> density;

  double center(std::size_t i) const { return lower + (static_cast<double>(i) + 0.5) * width; }
  double area() const;
};

std::size_t default_bin_count(std::size_t samples);

/// Density-normalized histogram; samples outside [lower, upper] are dropped
/// before normalization. Throws on a non-positive bin width.
Histogram histogram(std::span<const double> samples, const BinSpec& spec = {});

struct JarzynskiTrace {
  /// running[k-1] is the mean of exp(-beta W) over the first k samples.
  std::vector<double> running;
  double estimate = 0.0;
  double target = 0.0;
  double estimate_stderr = 0.0;
};

JarzynskiTrace jarzynski(std::span<const double> samples, double beta, double target);
/// Atom version: running[k-1] is the partial weighted sum over the first k atoms.
JarzynskiTrace jarzynski(const QuantumWorkAtoms& atoms, double beta, double target);

/// (1/beta) ln(omega_f / omega_i).
double delta_f_classical(double beta, double omega_i, double omega_f);

double dissipated_work(std::span<const double> samples, double delta_f);
double dissipated_work(const QuantumWorkAtoms& atoms, double delta_f);

/// Relative tolerance and bisection depth of the CDF quadrature.
inline constexpr double kCdfTolerance = 1e-12;
inline constexpr unsigned kCdfMaxDepth = 20;

/// Cumulative distribution function of a density on [0, inf), built by
/// adaptive quadrature in u = sqrt(W) so that 1/sqrt(W) singularities are harmless.
class AnalyticCdf {
 public:
  explicit AnalyticCdf(std::function<double(double)> density);

  double operator()(double work) const;
  /// Integral of the density over [a, b], 0 <= a <= b.
  double integral(double a, double b) const;

 private:
  std::function<double(double)> density_;
};

/// Kolmogorov-Smirnov distance between the empirical distribution and `cdf`.
double ks_distance(std::span<const double> samples, const AnalyticCdf& cdf);
/// Two-sample Kolmogorov-Smirnov distance.
double ks_distance(std::span<const double> a, std::span<const double> b);

/// Variance (n-1 normalized) of per-batch means of exp(-beta W); needs >= 2 batches.
double estimator_dispersion(std::span<const double> samples, double beta, std::size_t batches);

}  // namespace stasim
