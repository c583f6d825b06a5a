#include "stasim/otto.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "stasim/analytics.hpp"
#include "stasim/golden.hpp"
#include "stasim/protocol.hpp"
#include "stasim/quantum.hpp"

namespace stasim {

namespace {

constexpr std::size_t kScanPoints = 241;
constexpr double kScanOffset = 1e-9;

void check_spec(const OttoCycleSpec& spec) {
  if (!(spec.beta_hot > 0.0) || !(spec.beta_cold >= spec.beta_hot)) {
    throw std::invalid_argument("Otto cycle needs beta_cold >= beta_hot > 0");
  }
  if (!(spec.omega_i > 0.0)) throw std::invalid_argument("omega_i must be positive");
  if (spec.regime == Regime::quantum && !(spec.constants.hbar > 0.0)) {
    throw std::invalid_argument("hbar must be positive");
  }
  if (!(spec.relaxation_hot >= 0.0) || !(spec.relaxation_cold >= 0.0)) {
    throw std::invalid_argument("relaxation times must be non-negative");
  }
}

double default_upper(const OttoCycleSpec& spec) {
  return spec.omega_i * (1.0 + 4.0 * std::sqrt(spec.beta_cold / spec.beta_hot));
}

}  // namespace

double thermal_energy(double beta, double omega, Regime regime, const PhysicalConstants& constants) {
  if (!(beta > 0.0) || !(omega > 0.0)) {
    throw std::invalid_argument("thermal energy needs beta > 0 and omega > 0");
  }
  if (regime == Regime::classical) return 1.0 / beta;
  const double quantum = constants.hbar * omega;
  return quantum * (0.5 + 1.0 / std::expm1(beta * quantum));
}

double stroke_energy_factor(const StrokeKind& kind, double omega_from, double omega_to,
                            Regime regime, const PhysicalConstants& constants,
                            std::size_t quantum_dimension) {
  if (!(omega_from > 0.0) || !(omega_to > 0.0)) {
    throw std::invalid_argument("stroke frequencies must be positive");
  }
  switch (kind.type) {
    case StrokeKind::Type::sta:
    case StrokeKind::Type::quasistatic:
      return omega_to / omega_from;
    case StrokeKind::Type::sudden:
      return (omega_from * omega_from + omega_to * omega_to) / (2.0 * omega_from * omega_from);
    case StrokeKind::Type::bare: {
      if (!(kind.duration > 0.0)) throw std::invalid_argument("bare stroke needs a positive duration");
      if (omega_from == omega_to) return 1.0;
      const auto protocol = FrequencyProtocol::cosine_ramp(omega_from, omega_to, kind.duration);
      if (regime == Regime::classical) {
        const auto basic = basic_solutions(protocol);
        return adiabaticity_parameter(basic, omega_from, omega_to) * omega_to / omega_from;
      }
      FockBasisConfig cfg;
      cfg.dimension = quantum_dimension;
      cfg.omega_ref = omega_from;
      cfg.mass = constants.mass;
      cfg.hbar = constants.hbar;
      const auto tm = transition_matrix(protocol, Drive::bare, cfg, 1);
      double levels = 0.0;
      for (std::size_t m = 0; m < tm.cols(); ++m) {
        levels += tm.probability(0, static_cast<Eigen::Index>(m)) * (static_cast<double>(m) + 0.5);
      }
      return levels * omega_to / (0.5 * omega_from);
    }
  }
  throw std::invalid_argument("unknown stroke kind");
}

CycleResult evaluate_cycle(const OttoCycleSpec& spec) {
  check_spec(spec);
  if (!spec.omega_f) throw std::invalid_argument("evaluate_cycle needs omega_f");
  const double wf = *spec.omega_f;
  if (!(wf > spec.omega_i)) throw std::invalid_argument("Otto cycle needs omega_f > omega_i");

  CycleResult r;
  r.omega_f = wf;
  r.energy_a = thermal_energy(spec.beta_cold, spec.omega_i, spec.regime, spec.constants);
  r.energy_b = stroke_energy_factor(spec.compression, spec.omega_i, wf, spec.regime,
                                     spec.constants, spec.quantum_dimension) * r.energy_a;
  r.energy_c = thermal_energy(spec.beta_hot, wf, spec.regime, spec.constants);
  r.energy_d = stroke_energy_factor(spec.expansion, wf, spec.omega_i, spec.regime,
                                     spec.constants, spec.quantum_dimension) * r.energy_c;

  r.work_compression = r.energy_b - r.energy_a;
  r.work_expansion = r.energy_d - r.energy_c;
  r.w_net = -(r.work_compression + r.work_expansion);
  r.q_hot = r.energy_c - r.energy_b;
  r.q_cold = r.energy_a - r.energy_d;

  const double scale = r.energy_a + r.energy_b + r.energy_c + r.energy_d;
  const double noise = 64.0 * std::numeric_limits<double>::epsilon() * scale;
  r.feasible = r.w_net > noise && r.q_hot > 0.0;
  r.efficiency = r.feasible ? r.w_net / r.q_hot : 0.0;

  r.cycle_duration = spec.compression.duration + spec.expansion.duration + spec.relaxation_hot +
                     spec.relaxation_cold;
  r.power = r.cycle_duration > 0.0 ? r.w_net / r.cycle_duration : 0.0;
  return r;
}

OptimizationResult optimize_frequency(const OttoCycleSpec& spec, std::optional<double> lower,
                                      std::optional<double> upper) {
  check_spec(spec);
  const double lo = lower.value_or(spec.omega_i * (1.0 + kScanOffset));
  const double hi = upper.value_or(default_upper(spec));
  if (!(lo > spec.omega_i) || !(hi > lo)) {
    throw std::invalid_argument("optimization bracket must satisfy omega_i < lower < upper");
  }

  auto cycle_at = [&spec](double wf) {
    OttoCycleSpec s = spec;
    s.omega_f = wf;
    return evaluate_cycle(s);
  };

  // Coarse scan in log(omega_f / omega_i - 1): the optimum can sit very close
  // to omega_i when the baths are nearly equal.
  const double s_lo = std::log(lo / spec.omega_i - 1.0);
  const double s_hi = std::log(hi / spec.omega_i - 1.0);
  auto omega_of = [&](double s) { return spec.omega_i * (1.0 + std::exp(s)); };
  std::vector<double> grid(kScanPoints);
  std::vector<double> values(kScanPoints);
  for (std::size_t k = 0; k < kScanPoints; ++k) {
    const double s = s_lo + (s_hi - s_lo) * static_cast<double>(k) / (kScanPoints - 1);
    grid[k] = k + 1 == kScanPoints ? hi : (k == 0 ? lo : omega_of(s));
    values[k] = cycle_at(grid[k]).w_net;
  }
  const auto best = static_cast<std::size_t>(
      std::max_element(values.begin(), values.end()) - values.begin());

  OptimizationResult out;
  out.at_boundary = best == 0 || best + 1 == kScanPoints;
  if (out.at_boundary || !(values[best] > 0.0)) {
    out.omega_f = grid[best];
    out.cycle = cycle_at(out.omega_f);
    return out;
  }
  const auto refined = golden_section_maximize([&](double wf) { return cycle_at(wf).w_net; },
                                               grid[best - 1], grid[best + 1], 1e-12);
  out.omega_f = refined.x;
  out.cycle = cycle_at(refined.x);
  return out;
}

double eta_adiabatic_classical(double beta_hot_over_cold) {
  if (!(beta_hot_over_cold > 0.0) || beta_hot_over_cold > 1.0) {
    throw std::invalid_argument("beta_hot / beta_cold must lie in (0, 1]");
  }
  return 1.0 - std::sqrt(beta_hot_over_cold);
}

double eta_sudden_classical(double beta_hot_over_cold) {
  if (!(beta_hot_over_cold > 0.0) || beta_hot_over_cold > 1.0) {
    throw std::invalid_argument("beta_hot / beta_cold must lie in (0, 1]");
  }
  const double s = std::sqrt(beta_hot_over_cold);
  return (1.0 - s) / (2.0 + s);
}

std::vector<EfficiencyPoint> efficiency_curves(Regime regime, double beta_cold, double omega_i,
                                               std::span<const double> ratios,
                                               const PhysicalConstants& constants) {
  std::vector<EfficiencyPoint> points;
  points.reserve(ratios.size());
  for (double ratio : ratios) {
    if (!(ratio >= 1.0)) throw std::invalid_argument("beta ratios must be >= 1");
    EfficiencyPoint p;
    p.beta_ratio = ratio;
    p.eta_adiabatic_closed_form = eta_adiabatic_classical(1.0 / ratio);
    p.eta_sudden_closed_form = eta_sudden_classical(1.0 / ratio);

    OttoCycleSpec spec;
    spec.beta_cold = beta_cold;
    spec.beta_hot = beta_cold / ratio;
    spec.omega_i = omega_i;
    spec.regime = regime;
    spec.constants = constants;
    if (ratio > 1.0) {
      spec.compression = spec.expansion = StrokeKind::sta();
      p.eta_sta = optimize_frequency(spec).cycle.efficiency;
      spec.compression = spec.expansion = StrokeKind::sudden();
      p.eta_sudden = optimize_frequency(spec).cycle.efficiency;
    }
    points.push_back(p);
  }
  return points;
}

}  // namespace stasim
