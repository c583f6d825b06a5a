#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "stasim/protocol.hpp"

namespace stasim {

/// Whether the counterdiabatic control term is switched on.
enum class Drive { bare, counterdiabatic };

std::string to_string(Drive drive);

struct PhaseState {
  double p = 0.0;
  double q = 0.0;
};

/// Action I >= 0, angle in [0, 2 pi). Convention: q ~ sin(angle), p ~ cos(angle).
struct ActionAngle {
  double action = 0.0;
  double angle = 0.0;
};

struct OscillatorParams {
  double mass = 1.0;
};

struct EnsembleSpec {
  double beta = 1.0;
  std::size_t count = 1;
  std::uint64_t seed = 0;
};

struct PhaseVelocity {
  double p_dot;
  double q_dot;
};

/// Raised when adaptive integration cannot reach the end of the protocol.
class IntegrationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// H0 = p^2 / 2m + m omega^2 q^2 / 2.
double bare_energy(PhaseState s, double omega, const OscillatorParams& params);

ActionAngle to_action_angle(PhaseState s, double omega, const OscillatorParams& params);
PhaseState from_action_angle(ActionAngle aa, double omega, const OscillatorParams& params);

/// H_C = -(omega_dot / 2 omega) p q.
double control_value(PhaseState s, const FrequencyProtocol& protocol, double t);

/// Hamilton's equations of H0 (+ H_C when driven counterdiabatically).
PhaseVelocity derivative(PhaseState s, double t, const FrequencyProtocol& protocol, Drive drive,
                         const OscillatorParams& params);

inline constexpr double kDefaultClassicalTolerance = 1e-11;

/// Integrates from t = 0 to t = tau with local error control at `tol`.
PhaseState integrate(PhaseState initial, const FrequencyProtocol& protocol, Drive drive,
                     const OscillatorParams& params, double tol = kDefaultClassicalTolerance);

/// Linear flow map over [0, tau]: final = M * (q, p). Row/column order is (q, p).
using FlowMap = std::array<std::array<double, 2>, 2>;

/// The dynamics are linear, so two integrations fix the map for every initial state.
FlowMap flow_map(const FrequencyProtocol& protocol, Drive drive, const OscillatorParams& params,
                 double tol = kDefaultClassicalTolerance);

PhaseState apply_flow(const FlowMap& map, PhaseState s) noexcept;

/// Canonical ensemble at frequency omega; sample i uses stream i of `spec.seed`.
std::vector<PhaseState> sample_gibbs(const EnsembleSpec& spec, double omega,
                                     const OscillatorParams& params);

/// One Gibbs sample, identical to element `index` of `sample_gibbs`.
PhaseState gibbs_sample(std::uint64_t seed, std::uint64_t index, double beta, double omega,
                        const OscillatorParams& params);

/// Inclusive work H0(final, omega_f) - H0(initial, omega_i).
double trajectory_work(PhaseState initial, PhaseState final, const FrequencyProtocol& protocol,
                       const OscillatorParams& params);

enum class EnsembleMethod {
  /// Adaptive integration of every trajectory.
  per_trajectory,
  /// One flow-map integration applied to every initial state.
  flow_map,
};

/// Work values for `count` Gibbs trajectories; element i depends only on (seed, i).
std::vector<double> ensemble_work(const EnsembleSpec& spec, const FrequencyProtocol& protocol,
                                  Drive drive, const OscillatorParams& params,
                                  EnsembleMethod method = EnsembleMethod::per_trajectory,
                                  unsigned threads = 1, double tol = kDefaultClassicalTolerance);

}  // namespace stasim
