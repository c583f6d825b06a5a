#include "stasim/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace stasim {

std::string to_string(ProtocolKind kind) {
  switch (kind) {
    case ProtocolKind::cosine_ramp: return "cosine-ramp";
    case ProtocolKind::constant: return "constant";
    case ProtocolKind::table: return "table";
  }
  return "unknown";
}

namespace {

void require_positive(double value, const char* name) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw std::invalid_argument(std::string(name) + " must be positive and finite");
  }
}

// Endpoint slope of a monotone cubic (three-point formula, shape preserving).
double edge_slope(double h0, double h1, double d0, double d1) {
  double m = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
  if (std::signbit(m) != std::signbit(d0) || d0 == 0.0) {
    m = 0.0;
  } else if (std::signbit(d0) != std::signbit(d1) && std::abs(m) > std::abs(3.0 * d0)) {
    m = 3.0 * d0;
  }
  return m;
}

}  // namespace

FrequencyProtocol FrequencyProtocol::cosine_ramp(double omega_i, double omega_f, double tau) {
  require_positive(omega_i, "omega_i");
  require_positive(omega_f, "omega_f");
  require_positive(tau, "tau");
  FrequencyProtocol p;
  p.kind_ = ProtocolKind::cosine_ramp;
  p.omega_i_ = omega_i;
  p.omega_f_ = omega_f;
  p.tau_ = tau;
  return p;
}

FrequencyProtocol FrequencyProtocol::constant(double omega, double tau) {
  require_positive(omega, "omega");
  require_positive(tau, "tau");
  FrequencyProtocol p;
  p.kind_ = ProtocolKind::constant;
  p.omega_i_ = omega;
  p.omega_f_ = omega;
  p.tau_ = tau;
  return p;
}

FrequencyProtocol FrequencyProtocol::table(std::vector<std::pair<double, double>> samples) {
  if (samples.size() < 2) {
    throw std::invalid_argument("table protocol needs at least two samples");
  }
  if (samples.front().first != 0.0) {
    throw std::invalid_argument("table protocol must start at t = 0");
  }
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (!std::isfinite(samples[i].first) || !std::isfinite(samples[i].second)) {
      throw std::invalid_argument("table protocol samples must be finite");
    }
    if (i > 0 && !(samples[i].first > samples[i - 1].first)) {
      throw std::invalid_argument("table protocol times must be strictly increasing");
    }
  }

  const std::size_t n = samples.size();
  std::vector<double> h(n - 1), d(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    h[i] = samples[i + 1].first - samples[i].first;
    d[i] = (samples[i + 1].second - samples[i].second) / h[i];
  }

  std::vector<double> m(n, 0.0);
  if (n == 2) {
    m[0] = m[1] = d[0];
  } else {
    for (std::size_t k = 1; k + 1 < n; ++k) {
      if (d[k - 1] * d[k] <= 0.0) {
        m[k] = 0.0;
      } else {
        const double w1 = 2.0 * h[k] + h[k - 1];
        const double w2 = h[k] + 2.0 * h[k - 1];
        m[k] = (w1 + w2) / (w1 / d[k - 1] + w2 / d[k]);
      }
    }
    m[0] = edge_slope(h[0], h[1], d[0], d[1]);
    m[n - 1] = edge_slope(h[n - 2], h[n - 3], d[n - 2], d[n - 3]);
  }

  FrequencyProtocol p;
  p.kind_ = ProtocolKind::table;
  p.omega_i_ = samples.front().second;
  p.omega_f_ = samples.back().second;
  p.tau_ = samples.back().first;
  p.samples_ = std::move(samples);
  p.slopes_ = std::move(m);
  return p;
}

void FrequencyProtocol::check_time(double t) const {
  if (!(t >= 0.0 && t <= tau_)) {
    std::ostringstream os;
    os << "time " << t << " outside protocol interval [0, " << tau_ << "]";
    throw std::domain_error(os.str());
  }
}

FrequencyRate FrequencyProtocol::table_rate(double t) const {
  auto it = std::upper_bound(samples_.begin(), samples_.end(), t,
                             [](double x, const auto& s) { return x < s.first; });
  std::size_t k = it == samples_.begin() ? 0 : static_cast<std::size_t>(it - samples_.begin()) - 1;
  k = std::min(k, samples_.size() - 2);

  const double t0 = samples_[k].first;
  const double h = samples_[k + 1].first - t0;
  const double y0 = samples_[k].second;
  const double y1 = samples_[k + 1].second;
  const double m0 = slopes_[k];
  const double m1 = slopes_[k + 1];
  const double s = (t - t0) / h;
  const double s2 = s * s;
  const double s3 = s2 * s;

  const double value = (2 * s3 - 3 * s2 + 1) * y0 + (s3 - 2 * s2 + s) * h * m0 +
                       (-2 * s3 + 3 * s2) * y1 + (s3 - s2) * h * m1;
  const double deriv = ((6 * s2 - 6 * s) * y0 + (-6 * s2 + 6 * s) * y1) / h +
                       (3 * s2 - 4 * s + 1) * m0 + (3 * s2 - 2 * s) * m1;
  return {value, deriv};
}

FrequencyRate FrequencyProtocol::rate_at(double t) const {
  check_time(t);
  switch (kind_) {
    case ProtocolKind::constant:
      return {omega_i_, 0.0};
    case ProtocolKind::cosine_ramp: {
      const double a2 = (omega_f_ / omega_i_) * (omega_f_ / omega_i_);
      const double phase = std::numbers::pi * t / tau_;
      const double omega =
          omega_i_ * std::sqrt(0.5 * (a2 + 1.0) - 0.5 * (a2 - 1.0) * std::cos(phase));
      // d(omega^2)/dt = omega_i^2 (a^2-1)/2 * (pi/tau) sin(phase)
      const double omega_sq_dot =
          omega_i_ * omega_i_ * 0.5 * (a2 - 1.0) * (std::numbers::pi / tau_) * (t == tau_ ? 0.0 : std::sin(phase));
      return {omega, omega_sq_dot / (2.0 * omega)};
    }
    case ProtocolKind::table:
      return table_rate(t);
  }
  return {omega_i_, 0.0};
}

double FrequencyProtocol::omega_at(double t) const { return rate_at(t).omega; }

double FrequencyProtocol::omega_dot_at(double t) const { return rate_at(t).omega_dot; }

std::string FrequencyProtocol::describe() const {
  std::ostringstream os;
  os.precision(17);
  os << to_string(kind_) << "(omega_i=" << omega_i_ << ", omega_f=" << omega_f_ << ", tau=" << tau_;
  if (kind_ == ProtocolKind::table) os << ", samples=" << samples_.size();
  os << ")";
  return os.str();
}

ValidationReport validate(const FrequencyProtocol& protocol) {
  ValidationReport report;
  const double tau = protocol.tau();
  const double scale = std::abs(protocol.omega_i()) / tau;
  const double tol = kEndpointDerivativeTolerance * scale;

  const double d0 = protocol.omega_dot_at(0.0);
  const double d1 = protocol.omega_dot_at(tau);
  if (!(std::abs(d0) <= tol) || !(std::abs(d1) <= tol)) {
    report.endpoint_derivatives_ok = false;
    std::ostringstream os;
    os << "endpoint derivative violation: omega_dot(0)=" << d0 << ", omega_dot(tau)=" << d1
       << " exceed tolerance " << tol;
    report.messages.push_back(os.str());
  }

  constexpr int kGrid = 2000;
  double min_omega = protocol.omega_i();
  bool increasing = true;
  bool decreasing = true;
  double prev = protocol.omega_at(0.0);
  for (int i = 0; i <= kGrid; ++i) {
    const double t = (i == kGrid) ? tau : tau * static_cast<double>(i) / kGrid;
    const double w = protocol.omega_at(t);
    min_omega = std::min(min_omega, w);
    const double slack = 1e-12 * std::max(std::abs(w), std::abs(prev));
    if (w < prev - slack) increasing = false;
    if (w > prev + slack) decreasing = false;
    prev = w;
  }
  for (const auto& [t, w] : protocol.samples()) min_omega = std::min(min_omega, w);

  if (!(min_omega > 0.0)) {
    report.positive = false;
    std::ostringstream os;
    os << "non-positive frequency: min omega = " << min_omega;
    report.messages.push_back(os.str());
  }

  const bool wants_increase = protocol.omega_f() >= protocol.omega_i();
  report.monotone = wants_increase ? increasing : decreasing;
  if (!report.monotone) {
    report.messages.push_back("warning: omega(t) is not monotone between its endpoints");
  }
  return report;
}

void require_valid(const FrequencyProtocol& protocol) {
  const auto report = validate(protocol);
  if (!report.ok()) {
    std::string msg = "invalid protocol " + protocol.describe();
    for (const auto& m : report.messages) msg += "; " + m;
    throw std::invalid_argument(msg);
  }
}

}  // namespace stasim
