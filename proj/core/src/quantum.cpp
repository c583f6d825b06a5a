#include "stasim/quantum.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "stasim/detail/adaptive.hpp"

namespace stasim {

void FockBasisConfig::validate() const {
  if (dimension < 4 || dimension % 2 != 0) {
    throw std::invalid_argument("Fock basis dimension must be even and at least 4");
  }
  if (!(omega_ref > 0.0)) throw std::invalid_argument("omega_ref must be positive");
  if (!(mass > 0.0)) throw std::invalid_argument("mass must be positive");
  if (!(hbar > 0.0)) throw std::invalid_argument("hbar must be positive");
}

namespace {

// sqrt((n+1)(n+2)): matrix element <n+2| a^dag^2 |n>.
double ladder2(std::size_t n) {
  const double x = static_cast<double>(n);
  return std::sqrt((x + 1.0) * (x + 2.0));
}

std::size_t leakage_start(std::size_t dim) {
  return dim - (dim + 9) / 10;
}

double log_sinh(double x) {
  // ln sinh x = x - ln 2 + ln(1 - e^{-2x}), x > 0
  return x - std::log(2.0) + std::log1p(-std::exp(-2.0 * x));
}

// Banded generator of the Schroedinger flow in the reference ladder basis:
// d psi/dt = -(i/hbar) (H0 + H_C) psi. Both hbar and the mass drop out.
class Schroedinger {
 public:
  Schroedinger(const FrequencyProtocol& protocol, Drive drive, double omega_ref,
               std::size_t dim, std::size_t columns)
      : protocol_(protocol), drive_(drive), omega_ref_(omega_ref), dim_(dim), columns_(columns),
        ladder_(dim) {
    for (std::size_t n = 0; n < dim; ++n) ladder_[n] = ladder2(n);
  }

  // State layout: column-major complex N x k, stored as interleaved (re, im).
  void operator()(const std::vector<double>& x, std::vector<double>& dxdt, double t) const {
    const auto r = protocol_.rate_at(std::clamp(t, 0.0, protocol_.tau()));
    const double w2 = r.omega * r.omega;
    const double diag = 0.25 * (omega_ref_ + w2 / omega_ref_);
    const double off = 0.25 * (w2 / omega_ref_ - omega_ref_);
    const double g = drive_ == Drive::counterdiabatic ? r.omega_dot / (4.0 * r.omega) : 0.0;

    const auto* psi = reinterpret_cast<const std::complex<double>*>(x.data());
    auto* out = reinterpret_cast<std::complex<double>*>(dxdt.data());
    const std::complex<double> minus_i(0.0, -1.0);
    for (std::size_t c = 0; c < columns_; ++c) {
      const auto* v = psi + c * dim_;
      auto* dv = out + c * dim_;
      for (std::size_t n = 0; n < dim_; ++n) {
        std::complex<double> h = diag * (2.0 * static_cast<double>(n) + 1.0) * v[n];
        std::complex<double> up(0.0, 0.0);    // a^2 psi
        std::complex<double> down(0.0, 0.0);  // a^dag^2 psi
        if (n + 2 < dim_) up = ladder_[n] * v[n + 2];
        if (n >= 2) down = ladder_[n - 2] * v[n - 2];
        h += off * (up + down);
        dv[n] = minus_i * h - g * (down - up);
      }
    }
  }

 private:
  const FrequencyProtocol& protocol_;
  Drive drive_;
  double omega_ref_;
  std::size_t dim_;
  std::size_t columns_;
  std::vector<double> ladder_;
};

double column_leakage(const Eigen::MatrixXcd& m, Eigen::Index col) {
  const auto dim = m.rows();
  const auto start = static_cast<Eigen::Index>(leakage_start(static_cast<std::size_t>(dim)));
  return m.col(col).segment(start, dim - start).squaredNorm();
}

}  // namespace

double QuantumState::leakage() const {
  const auto dim = amplitudes.size();
  const auto start = static_cast<Eigen::Index>(leakage_start(static_cast<std::size_t>(dim)));
  return amplitudes.segment(start, dim - start).squaredNorm();
}

QuantumState QuantumState::basis_state(std::size_t n, std::size_t dimension) {
  if (n >= dimension) throw std::out_of_range("basis index outside the truncated basis");
  QuantumState s{Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(dimension))};
  s.amplitudes[static_cast<Eigen::Index>(n)] = 1.0;
  return s;
}

Eigen::MatrixXd h0_matrix(double omega, const FockBasisConfig& cfg) {
  cfg.validate();
  if (!(omega > 0.0)) throw std::invalid_argument("omega must be positive");
  const auto dim = static_cast<Eigen::Index>(cfg.dimension);
  const double wr = cfg.omega_ref;
  const double diag = 0.25 * cfg.hbar * (wr + omega * omega / wr);
  const double off = 0.25 * cfg.hbar * (omega * omega / wr - wr);
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(dim, dim);
  for (Eigen::Index n = 0; n < dim; ++n) {
    h(n, n) = diag * (2.0 * static_cast<double>(n) + 1.0);
    if (n + 2 < dim) {
      const double e = off * ladder2(static_cast<std::size_t>(n));
      h(n + 2, n) = e;
      h(n, n + 2) = e;
    }
  }
  return h;
}

Eigen::MatrixXcd hc_matrix(const FrequencyProtocol& protocol, double t, const FockBasisConfig& cfg) {
  cfg.validate();
  const auto r = protocol.rate_at(t);
  const auto dim = static_cast<Eigen::Index>(cfg.dimension);
  // -(omega_dot / 4 omega) i hbar (a^dag^2 - a^2)
  const std::complex<double> coef(0.0, -cfg.hbar * r.omega_dot / (4.0 * r.omega));
  Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(dim, dim);
  for (Eigen::Index n = 0; n + 2 < dim; ++n) {
    const double s = ladder2(static_cast<std::size_t>(n));
    h(n + 2, n) = coef * s;
    h(n, n + 2) = -coef * s;
  }
  return h;
}

Eigenbasis eigenbasis(double omega, const FockBasisConfig& cfg) {
  cfg.validate();
  if (!(omega > 0.0)) throw std::invalid_argument("omega must be positive");
  const std::size_t dim = cfg.dimension;
  const double wr = cfg.omega_ref;
  const double diag = 0.25 * cfg.hbar * (wr + omega * omega / wr);
  const double off = 0.25 * cfg.hbar * (omega * omega / wr - wr);

  struct Level {
    double energy;
    Eigen::VectorXd vector;
  };
  std::vector<Level> levels;
  levels.reserve(dim);

  for (std::size_t parity = 0; parity < 2; ++parity) {
    const auto block = static_cast<Eigen::Index>(dim / 2);
    Eigen::VectorXd d(block);
    Eigen::VectorXd e(block - 1);
    for (Eigen::Index k = 0; k < block; ++k) {
      const std::size_t n = 2 * static_cast<std::size_t>(k) + parity;
      d[k] = diag * (2.0 * static_cast<double>(n) + 1.0);
      if (k + 1 < block) e[k] = off * ladder2(n);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
    solver.computeFromTridiagonal(d, e, Eigen::ComputeEigenvectors);
    if (solver.info() != Eigen::Success) {
      throw std::runtime_error("tridiagonal eigensolver failed");
    }
    for (Eigen::Index j = 0; j < block; ++j) {
      Eigen::VectorXd full = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim));
      const auto col = solver.eigenvectors().col(j);
      Eigen::Index arg = 0;
      col.cwiseAbs().maxCoeff(&arg);
      const double sign = col[arg] < 0.0 ? -1.0 : 1.0;
      for (Eigen::Index k = 0; k < block; ++k) {
        full[static_cast<Eigen::Index>(2 * static_cast<std::size_t>(k) + parity)] = sign * col[k];
      }
      levels.push_back({solver.eigenvalues()[j], std::move(full)});
    }
  }
  std::stable_sort(levels.begin(), levels.end(),
                   [](const Level& a, const Level& b) { return a.energy < b.energy; });

  Eigenbasis out;
  out.energies.resize(static_cast<Eigen::Index>(dim));
  out.vectors.resize(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  for (std::size_t j = 0; j < dim; ++j) {
    out.energies[static_cast<Eigen::Index>(j)] = levels[j].energy;
    out.vectors.col(static_cast<Eigen::Index>(j)) = levels[j].vector;
  }
  return out;
}

Eigen::MatrixXcd propagate_columns(const Eigen::MatrixXcd& initial,
                                   const FrequencyProtocol& protocol, Drive drive,
                                   const FockBasisConfig& cfg, double tol) {
  cfg.validate();
  if (static_cast<std::size_t>(initial.rows()) != cfg.dimension) {
    throw std::invalid_argument("state dimension does not match the basis");
  }
  const auto cols = static_cast<std::size_t>(initial.cols());
  std::vector<double> x(2 * cfg.dimension * cols);
  {
    auto* z = reinterpret_cast<std::complex<double>*>(x.data());
    for (std::size_t c = 0; c < cols; ++c) {
      for (std::size_t n = 0; n < cfg.dimension; ++n) {
        z[c * cfg.dimension + n] =
            initial(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(c));
      }
    }
  }

  Schroedinger system(protocol, drive, cfg.omega_ref, cfg.dimension, cols);
  detail::integrate_to<std::runtime_error>(system, x, protocol.tau(), tol, tol,
                                           detail::NoObserver{});

  Eigen::MatrixXcd out(initial.rows(), initial.cols());
  const auto* z = reinterpret_cast<const std::complex<double>*>(x.data());
  for (std::size_t c = 0; c < cols; ++c) {
    for (std::size_t n = 0; n < cfg.dimension; ++n) {
      out(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(c)) = z[c * cfg.dimension + n];
    }
  }

  for (Eigen::Index c = 0; c < out.cols(); ++c) {
    const double leak = column_leakage(out, c);
    if (leak > kLeakageThreshold) {
      std::ostringstream os;
      os << "truncation leakage " << leak << " exceeds " << kLeakageThreshold
         << " (basis dimension " << cfg.dimension << "); increase N";
      throw TruncationError(os.str());
    }
  }
  return out;
}

QuantumState propagate(const QuantumState& initial, const FrequencyProtocol& protocol, Drive drive,
                       const FockBasisConfig& cfg, double tol) {
  if (std::abs(initial.norm() - 1.0) > 1e-9) {
    throw std::invalid_argument("initial state must be normalized");
  }
  if (initial.leakage() > kLeakageThreshold) {
    throw TruncationError("initial state already populates the top of the basis; increase N");
  }
  Eigen::MatrixXcd m = initial.amplitudes;
  return QuantumState{propagate_columns(m, protocol, drive, cfg, tol).col(0)};
}

TransitionMatrix transition_matrix(const FrequencyProtocol& protocol, Drive drive,
                                   const FockBasisConfig& cfg, std::size_t n_max,
                                   std::size_t m_max, double tol) {
  cfg.validate();
  if (m_max == 0) m_max = cfg.dimension / 2;
  if (n_max == 0 || n_max > cfg.dimension / 2 || m_max > cfg.dimension) {
    throw std::invalid_argument("transition matrix range exceeds the reliable basis range");
  }
  const auto start = eigenbasis(protocol.omega_i(), cfg);
  const auto end = eigenbasis(protocol.omega_f(), cfg);

  const auto rows = static_cast<Eigen::Index>(n_max);
  const auto cols = static_cast<Eigen::Index>(m_max);
  Eigen::MatrixXcd initial = start.vectors.leftCols(rows).cast<std::complex<double>>();
  const Eigen::MatrixXcd final_states = propagate_columns(initial, protocol, drive, cfg, tol);

  TransitionMatrix tm;
  tm.omega_i = protocol.omega_i();
  tm.omega_f = protocol.omega_f();
  tm.tau = protocol.tau();
  tm.drive = drive;
  // amplitudes(m, n) = <m(omega_f) | U | n(omega_i)>
  const Eigen::MatrixXcd amplitudes =
      end.vectors.leftCols(cols).transpose().cast<std::complex<double>>() * final_states;
  tm.probability = amplitudes.cwiseAbs2().transpose();
  for (Eigen::Index c = 0; c < final_states.cols(); ++c) {
    tm.max_leakage = std::max(tm.max_leakage, column_leakage(final_states, c));
  }
  return tm;
}

std::vector<double> truncated_gibbs_weights(double beta, double omega, double hbar,
                                            std::size_t count, double* discarded_tail) {
  if (!(beta > 0.0) || !(omega > 0.0) || !(hbar > 0.0)) {
    throw std::invalid_argument("Gibbs weights need positive beta, omega and hbar");
  }
  const double x = beta * hbar * omega;
  std::vector<double> w(count);
  // P_n = (1 - e^{-x}) e^{-n x}
  const double first = -std::expm1(-x);
  double total = 0.0;
  for (std::size_t n = 0; n < count; ++n) {
    w[n] = first * std::exp(-static_cast<double>(n) * x);
    total += w[n];
  }
  if (discarded_tail) *discarded_tail = std::exp(-static_cast<double>(count) * x);
  for (auto& v : w) v /= total;
  return w;
}

std::size_t levels_for_tail(double beta, double omega, double hbar, double tail) {
  const double x = beta * hbar * omega;
  return static_cast<std::size_t>(std::ceil(-std::log(tail) / x));
}

namespace {

QuantumWorkAtoms merge_atoms(std::vector<WorkAtom> raw) {
  std::sort(raw.begin(), raw.end(),
            [](const WorkAtom& a, const WorkAtom& b) { return a.work < b.work; });
  QuantumWorkAtoms out;
  for (const auto& a : raw) {
    if (!out.atoms.empty()) {
      auto& last = out.atoms.back();
      const double scale = std::max(std::abs(last.work), std::abs(a.work));
      if (std::abs(a.work - last.work) <= kAtomMergeTolerance * scale) {
        const double p = last.probability + a.probability;
        if (p > 0.0) last.work = (last.work * last.probability + a.work * a.probability) / p;
        last.probability = p;
        continue;
      }
    }
    out.atoms.push_back(a);
  }
  return out;
}

}  // namespace

QuantumWorkAtoms quantum_work_atoms(const TransitionMatrix& tm, double beta, double omega_i,
                                    double omega_f, double hbar) {
  double tail = 0.0;
  const auto weights = truncated_gibbs_weights(beta, omega_i, hbar, tm.rows(), &tail);
  std::vector<WorkAtom> raw;
  raw.reserve(tm.rows() * tm.cols());
  for (std::size_t n = 0; n < tm.rows(); ++n) {
    const double e0 = hbar * omega_i * (static_cast<double>(n) + 0.5);
    for (std::size_t m = 0; m < tm.cols(); ++m) {
      const double p =
          weights[n] * tm.probability(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
      if (p <= 0.0) continue;
      raw.push_back({hbar * omega_f * (static_cast<double>(m) + 0.5) - e0, p});
    }
  }
  auto out = merge_atoms(std::move(raw));
  out.discarded_tail = tail;
  return out;
}

QuantumWorkAtoms pdf_quantum_adiabatic(double beta, double omega_i, double omega_f, double hbar,
                                       std::size_t n_max) {
  if (!(beta > 0.0) || !(omega_i > 0.0) || !(omega_f > 0.0) || !(hbar > 0.0)) {
    throw std::invalid_argument("adiabatic atoms need positive parameters");
  }
  const double x = beta * hbar * omega_i;
  const double tail = std::exp(-static_cast<double>(n_max) * x);
  if (!(tail < 1e-10)) {
    throw std::invalid_argument("n_max too small: discarded Gibbs tail is not below 1e-10");
  }
  std::vector<WorkAtom> raw;
  const double first = -std::expm1(-x);
  for (std::size_t n = 0; n < n_max; ++n) {
    raw.push_back({hbar * (omega_f - omega_i) * (static_cast<double>(n) + 0.5),
                   first * std::exp(-static_cast<double>(n) * x)});
  }
  auto out = merge_atoms(std::move(raw));
  out.discarded_tail = tail;
  return out;
}

double QuantumWorkAtoms::total_probability() const {
  double s = 0.0;
  for (const auto& a : atoms) s += a.probability;
  return s;
}

double QuantumWorkAtoms::probability_below(double work) const {
  double s = 0.0;
  for (const auto& a : atoms) {
    if (a.work < work) s += a.probability;
  }
  return s;
}

double QuantumWorkAtoms::mean() const {
  double s = 0.0;
  double p = 0.0;
  for (const auto& a : atoms) {
    s += a.work * a.probability;
    p += a.probability;
  }
  return s / p;
}

double QuantumWorkAtoms::stddev() const {
  const double mu = mean();
  double s = 0.0;
  double p = 0.0;
  for (const auto& a : atoms) {
    s += (a.work - mu) * (a.work - mu) * a.probability;
    p += a.probability;
  }
  return std::sqrt(s / p);
}

double delta_f_quantum(double beta, double omega_i, double omega_f, double hbar) {
  if (!(beta > 0.0) || !(omega_i > 0.0) || !(omega_f > 0.0) || !(hbar > 0.0)) {
    throw std::invalid_argument("free energy needs positive parameters");
  }
  const double xi = 0.5 * beta * hbar * omega_i;
  const double xf = 0.5 * beta * hbar * omega_f;
  return (log_sinh(xf) - log_sinh(xi)) / beta;
}

double adiabaticity_parameter(const BasicSolutions& b, double omega_i, double omega_f) {
  if (!(omega_i > 0.0) || !(omega_f > 0.0)) {
    throw std::invalid_argument("frequencies must be positive");
  }
  const double wi2 = omega_i * omega_i;
  const double wf2 = omega_f * omega_f;
  return (b.s_dot * b.s_dot * wi2 + wf2 * wi2 * b.s * b.s + b.c_dot * b.c_dot + wf2 * b.c * b.c) /
         (2.0 * omega_i * omega_f);
}

}  // namespace stasim
