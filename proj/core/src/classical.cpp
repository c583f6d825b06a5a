#include "stasim/classical.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <thread>

#include "stasim/detail/adaptive.hpp"
#include "stasim/rng.hpp"

namespace stasim {

std::string to_string(Drive drive) {
  return drive == Drive::counterdiabatic ? "counterdiabatic" : "bare";
}

namespace {

void check_params(const OscillatorParams& params) {
  if (!(params.mass > 0.0)) throw std::invalid_argument("mass must be positive");
}

void check_omega(double omega) {
  if (!(omega > 0.0)) throw std::invalid_argument("omega must be positive");
}

using Vec2 = std::array<double, 2>;  // (q, p)

struct Hamilton {
  const FrequencyProtocol* protocol;
  Drive drive;
  double mass;

  void operator()(const Vec2& x, Vec2& dxdt, double t) const {
    const auto d = derivative({x[1], x[0]}, std::clamp(t, 0.0, protocol->tau()), *protocol, drive,
                              OscillatorParams{mass});
    dxdt[0] = d.q_dot;
    dxdt[1] = d.p_dot;
  }
};

}  // namespace

double bare_energy(PhaseState s, double omega, const OscillatorParams& params) {
  return s.p * s.p / (2.0 * params.mass) + 0.5 * params.mass * omega * omega * s.q * s.q;
}

ActionAngle to_action_angle(PhaseState s, double omega, const OscillatorParams& params) {
  check_omega(omega);
  check_params(params);
  const double action = bare_energy(s, omega, params) / omega;
  if (action == 0.0) return {0.0, 0.0};
  // q sqrt(m omega) ~ sin(angle), p / sqrt(m omega) ~ cos(angle)
  double angle = std::atan2(params.mass * omega * s.q, s.p);
  if (angle < 0.0) angle += 2.0 * std::numbers::pi;
  if (angle >= 2.0 * std::numbers::pi) angle = 0.0;
  return {action, angle};
}

PhaseState from_action_angle(ActionAngle aa, double omega, const OscillatorParams& params) {
  check_omega(omega);
  check_params(params);
  if (aa.action < 0.0) throw std::invalid_argument("action must be non-negative");
  const double m = params.mass;
  return {std::sqrt(2.0 * m * omega * aa.action) * std::cos(aa.angle),
          std::sqrt(2.0 * aa.action / (m * omega)) * std::sin(aa.angle)};
}

double control_value(PhaseState s, const FrequencyProtocol& protocol, double t) {
  const auto r = protocol.rate_at(t);
  return -(r.omega_dot / (2.0 * r.omega)) * s.p * s.q;
}

PhaseVelocity derivative(PhaseState s, double t, const FrequencyProtocol& protocol, Drive drive,
                         const OscillatorParams& params) {
  const auto r = protocol.rate_at(t);
  const double m = params.mass;
  PhaseVelocity v{-m * r.omega * r.omega * s.q, s.p / m};
  if (drive == Drive::counterdiabatic) {
    const double g = r.omega_dot / (2.0 * r.omega);
    v.q_dot -= g * s.q;
    v.p_dot += g * s.p;
  }
  return v;
}

PhaseState integrate(PhaseState initial, const FrequencyProtocol& protocol, Drive drive,
                     const OscillatorParams& params, double tol) {
  check_params(params);
  if (!(tol > 0.0)) throw std::invalid_argument("tolerance must be positive");
  Vec2 x{initial.q, initial.p};
  const double scale = std::hypot(initial.q * params.mass * protocol.omega_i(), initial.p);
  if (scale == 0.0) return initial;
  // Absolute errors are measured on (m omega_i q, p) scaled to the initial radius.
  const double abs_tol = tol * scale / std::max(1.0, params.mass * protocol.omega_i());
  detail::integrate_to<IntegrationError>(Hamilton{&protocol, drive, params.mass}, x,
                                         protocol.tau(), abs_tol, tol, detail::NoObserver{});
  return {x[1], x[0]};
}

FlowMap flow_map(const FrequencyProtocol& protocol, Drive drive, const OscillatorParams& params,
                 double tol) {
  const double m_omega = params.mass * protocol.omega_i();
  // Unit displacement and unit momentum have comparable energies when scaled by m omega_i.
  const PhaseState from_q = integrate({0.0, 1.0}, protocol, drive, params, tol);
  const PhaseState from_p = integrate({m_omega, 0.0}, protocol, drive, params, tol);
  FlowMap map{};
  map[0][0] = from_q.q;
  map[1][0] = from_q.p;
  map[0][1] = from_p.q / m_omega;
  map[1][1] = from_p.p / m_omega;
  return map;
}

PhaseState apply_flow(const FlowMap& map, PhaseState s) noexcept {
  return {map[1][0] * s.q + map[1][1] * s.p, map[0][0] * s.q + map[0][1] * s.p};
}

PhaseState gibbs_sample(std::uint64_t seed, std::uint64_t index, double beta, double omega,
                        const OscillatorParams& params) {
  StreamRng rng(seed, index);
  const double action = rng.exponential(1.0 / (beta * omega));
  const double angle = rng.angle();
  return from_action_angle({action, angle}, omega, params);
}

std::vector<PhaseState> sample_gibbs(const EnsembleSpec& spec, double omega,
                                     const OscillatorParams& params) {
  if (!(spec.beta > 0.0)) throw std::invalid_argument("beta must be positive");
  if (spec.count < 1) throw std::invalid_argument("ensemble count must be at least 1");
  check_omega(omega);
  std::vector<PhaseState> out(spec.count);
  for (std::size_t i = 0; i < spec.count; ++i) {
    out[i] = gibbs_sample(spec.seed, i, spec.beta, omega, params);
  }
  return out;
}

double trajectory_work(PhaseState initial, PhaseState final, const FrequencyProtocol& protocol,
                       const OscillatorParams& params) {
  return bare_energy(final, protocol.omega_f(), params) -
         bare_energy(initial, protocol.omega_i(), params);
}

std::vector<double> ensemble_work(const EnsembleSpec& spec, const FrequencyProtocol& protocol,
                                  Drive drive, const OscillatorParams& params,
                                  EnsembleMethod method, unsigned threads, double tol) {
  if (!(spec.beta > 0.0)) throw std::invalid_argument("beta must be positive");
  if (spec.count < 1) throw std::invalid_argument("ensemble count must be at least 1");
  check_params(params);

  FlowMap map{};
  if (method == EnsembleMethod::flow_map) map = flow_map(protocol, drive, params, tol);

  std::vector<double> work(spec.count);
  auto run_range = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const auto s0 = gibbs_sample(spec.seed, i, spec.beta, protocol.omega_i(), params);
      const auto s1 = method == EnsembleMethod::flow_map
                          ? apply_flow(map, s0)
                          : integrate(s0, protocol, drive, params, tol);
      work[i] = trajectory_work(s0, s1, protocol, params);
    }
  };

  threads = std::max(1u, threads);
  if (threads == 1 || spec.count < 2 * threads) {
    run_range(0, spec.count);
    return work;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(threads);
  const std::size_t chunk = (spec.count + threads - 1) / threads;
  for (unsigned k = 0; k < threads; ++k) {
    const std::size_t begin = std::min(spec.count, k * chunk);
    const std::size_t end = std::min(spec.count, begin + chunk);
    pool.emplace_back([&, begin, end, k] {
      try {
        run_range(begin, end);
      } catch (...) {
        errors[k] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return work;
}

}  // namespace stasim
