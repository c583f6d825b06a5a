#pragma once

#include <string>
#include <utility>
#include <vector>

namespace stasim {

enum class ProtocolKind { cosine_ramp, constant, table };

std::string to_string(ProtocolKind kind);

/// Angular frequency and its time derivative at one instant.
struct FrequencyRate {
  double omega;
  double omega_dot;
};

/// Time-dependent frequency schedule omega(t) on [0, tau].
///
/// Immutable after construction. Closed-form kinds reject non-positive
/// parameters at construction time. Tables accept any sample values so that
/// `validate` can report what is wrong with them.
class FrequencyProtocol {
 public:
  /// omega(t) = omega_i * sqrt((a^2+1)/2 - (a^2-1)/2 cos(pi t / tau)), a = omega_f/omega_i.
  static FrequencyProtocol cosine_ramp(double omega_i, double omega_f, double tau);
  static FrequencyProtocol constant(double omega, double tau);
  /// Samples (t, omega) with t strictly increasing from 0. Interpolated with a
  /// C1 monotone (Fritsch-Carlson) cubic Hermite spline.
  static FrequencyProtocol table(std::vector<std::pair<double, double>> samples);

  ProtocolKind kind() const noexcept { return kind_; }
  double omega_i() const noexcept { return omega_i_; }
  double omega_f() const noexcept { return omega_f_; }
  double tau() const noexcept { return tau_; }

  /// Throws std::domain_error for t outside [0, tau].
  double omega_at(double t) const;
  double omega_dot_at(double t) const;
  FrequencyRate rate_at(double t) const;

  const std::vector<std::pair<double, double>>& samples() const noexcept { return samples_; }

  /// Short human-readable description, used in provenance records.
  std::string describe() const;

 private:
  FrequencyProtocol() = default;
  void check_time(double t) const;
  FrequencyRate table_rate(double t) const;

  ProtocolKind kind_ = ProtocolKind::constant;
  double omega_i_ = 1.0;
  double omega_f_ = 1.0;
  double tau_ = 1.0;
  std::vector<std::pair<double, double>> samples_;
  std::vector<double> slopes_;
};

struct ValidationReport {
  bool endpoint_derivatives_ok = true;
  bool positive = true;
  /// Warning only; the positivity proof for bare work assumes monotone omega.
  bool monotone = true;
  std::vector<std::string> messages;

  bool ok() const noexcept { return endpoint_derivatives_ok && positive; }
};

/// Endpoint-derivative tolerance relative to omega_i / tau.
inline constexpr double kEndpointDerivativeTolerance = 1e-10;

ValidationReport validate(const FrequencyProtocol& protocol);

/// Throws std::invalid_argument with the report messages when validation fails.
void require_valid(const FrequencyProtocol& protocol);

}  // namespace stasim
