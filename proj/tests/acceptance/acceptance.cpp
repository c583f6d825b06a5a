// Acceptance checks: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "stasim/analytics.hpp"
#include "stasim/classical.hpp"
#include "stasim/otto.hpp"
#include "stasim/quantum.hpp"
#include "stasim/rng.hpp"
#include "stasim/runner.hpp"
#include "stasim/statistics.hpp"

using namespace stasim;

namespace {

constexpr double kBeta = 0.2;
constexpr double kWi = 10.0;
const double kWf = 10.0 * std::numbers::sqrt3;
constexpr double kTau = 1e-4;

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) pass = false;
    detail << (ok ? "" : "[x] ") << what << "; ";
  }
};

std::string fmt(double v) { return format_number(v); }

bool within_rel(double value, double ref, double tol) {
  return std::abs(value - ref) <= tol * std::abs(ref);
}

FrequencyProtocol ramp() { return FrequencyProtocol::cosine_ramp(kWi, kWf, kTau); }

Outcome criterion1() {
  Outcome o;
  const auto p = ramp();
  const EnsembleSpec spec{kBeta, 100000, 20240101};
  const auto form = quadratic_form(basic_solutions(p), kBeta, kWi, kWf);

  const auto cd = ensemble_work(spec, p, Drive::counterdiabatic, {});
  const AnalyticCdf cd_cdf([](double w) { return pdf_adiabatic(w, kBeta, kWi, kWf); });
  const double cd_ks = ks_distance(cd, cd_cdf);
  const auto cd_s = summary(cd);
  const double ad_moment = (kWf - kWi) / (kWi * kBeta);
  o.require(cd_ks < 0.02, "sta KS=" + fmt(cd_ks));
  o.require(within_rel(cd_s.mean, ad_moment, 0.01), "sta mean=" + fmt(cd_s.mean));
  o.require(within_rel(cd_s.stddev, ad_moment, 0.01), "sta sigma=" + fmt(cd_s.stddev));

  const auto bare = ensemble_work(spec, p, Drive::bare, {});
  const AnalyticCdf bare_cdf([&](double w) { return pdf_nonadiabatic(w, form); });
  const double bare_ks = ks_distance(bare, bare_cdf);
  const auto bare_s = summary(bare);
  o.require(bare_ks < 0.02, "bare KS=" + fmt(bare_ks));
  o.require(within_rel(bare_s.mean, 5.0, 0.02), "bare mean=" + fmt(bare_s.mean));
  o.require(within_rel(bare_s.stddev, 7.071, 0.02), "bare sigma=" + fmt(bare_s.stddev));
  return o;
}

Outcome criterion2() {
  Outcome o;
  const auto p = ramp();
  const std::size_t samples = 1000000;
  const std::size_t batches = samples / 10000;
  const double target = 1.0 / std::numbers::sqrt3;

  for (Drive d : {Drive::counterdiabatic, Drive::bare}) {
    const auto w = ensemble_work({kBeta, samples, 20240102}, p, d, {});
    const double est = jarzynski(w, kBeta, target).estimate;
    o.require(std::abs(est - target) < 0.01, to_string(d) + " estimate=" + fmt(est));
  }

  const FlowMap cd_map = flow_map(p, Drive::counterdiabatic, {});
  const FlowMap bare_map = flow_map(p, Drive::bare, {});
  const std::size_t replicates = 20;
  std::size_t wins = 0;
  std::vector<double> cd_w(samples);
  std::vector<double> bare_w(samples);
  for (std::size_t r = 0; r < replicates; ++r) {
    const std::uint64_t seed = StreamRng(20240102, r).next();
    for (std::size_t i = 0; i < samples; ++i) {
      const auto s = gibbs_sample(seed, i, kBeta, kWi, {});
      cd_w[i] = trajectory_work(s, apply_flow(cd_map, s), p, {});
      bare_w[i] = trajectory_work(s, apply_flow(bare_map, s), p, {});
    }
    if (estimator_dispersion(cd_w, kBeta, batches) < estimator_dispersion(bare_w, kBeta, batches)) ++wins;
  }
  const double fraction = static_cast<double>(wins) / static_cast<double>(replicates);
  o.require(fraction >= 0.95, "sta smaller batch variance in " + fmt(fraction) + " of replicates");
  return o;
}

struct QuantumSets {
  QuantumWorkAtoms cd;
  QuantumWorkAtoms bare;
  std::size_t n_max = 0;
};

QuantumSets quantum_sets(double hbar) {
  FockBasisConfig cfg;
  cfg.dimension = 512;
  cfg.omega_ref = kWi;
  cfg.hbar = hbar;
  QuantumSets s;
  s.n_max = std::min<std::size_t>(levels_for_tail(kBeta, kWi, hbar, 1e-12), cfg.dimension / 2);
  const auto p = ramp();
  s.cd = quantum_work_atoms(transition_matrix(p, Drive::counterdiabatic, cfg, s.n_max), kBeta, kWi, kWf, hbar);
  s.bare = quantum_work_atoms(transition_matrix(p, Drive::bare, cfg, s.n_max), kBeta, kWi, kWf, hbar);
  return s;
}

double closed_form_deviation(const QuantumWorkAtoms& atoms, const QuantumWorkAtoms& closed) {
  double worst = 0.0;
  double matched = 0.0;
  for (const auto& a : closed.atoms) {
    double prob = 0.0;
    for (const auto& b : atoms.atoms) {
      if (std::abs(b.work - a.work) <= kAtomMergeTolerance * std::max(1.0, std::abs(a.work))) prob += b.probability;
    }
    matched += prob;
    worst = std::max(worst, std::abs(prob - a.probability));
  }
  return std::max(worst, atoms.total_probability() - matched);
}

Outcome criterion3(const QuantumSets& s, const QuantumSets& alt, double alt_hbar) {
  Outcome o;
  const double cd_neg = s.cd.probability_below(0.0);
  const double bare_neg = s.bare.probability_below(0.0);
  o.require(cd_neg <= 1e-12, "sta P(W<0)=" + fmt(cd_neg));
  o.require(within_rel(s.cd.stddev(), 3.1, 0.05), "sta sigma=" + fmt(s.cd.stddev()));
  o.require(bare_neg > 0.01, "bare P(W<0)=" + fmt(bare_neg));
  o.require(within_rel(s.bare.stddev(), 8.7, 0.10), "bare sigma=" + fmt(s.bare.stddev()));
  const auto closed = pdf_quantum_adiabatic(kBeta, kWi, kWf, 1.0, s.n_max);
  const double dev = closed_form_deviation(s.cd, closed);
  o.require(dev <= 1e-6, "sta closed-form deviation=" + fmt(dev));
  o.detail << "hbar=" << fmt(alt_hbar) << " for reference: sta sigma=" << fmt(alt.cd.stddev())
           << " bare sigma=" << fmt(alt.bare.stddev()) << " bare P(W<0)=" << fmt(alt.bare.probability_below(0.0))
           << "; ";
  return o;
}

Outcome criterion4(const QuantumSets& s) {
  Outcome o;
  const double target = std::exp(-kBeta * delta_f_quantum(kBeta, kWi, kWf, 1.0));
  const double cd = std::abs(jarzynski(s.cd, kBeta, target).estimate - target);
  const double bare = std::abs(jarzynski(s.bare, kBeta, target).estimate - target);
  o.require(cd <= 1e-6, "sta error=" + fmt(cd));
  o.require(bare <= 1e-6, "bare error=" + fmt(bare));
  return o;
}

Outcome criterion5() {
  Outcome o;
  std::vector<double> ratios;
  for (double r : {0.04, 0.25, 0.5, 0.81}) ratios.push_back(1.0 / r);
  for (const auto& p : efficiency_curves(Regime::classical, 10.0, 10.0, ratios, {})) {
    const double da = std::abs(p.eta_sta - p.eta_adiabatic_closed_form);
    const double dn = std::abs(p.eta_sudden - p.eta_sudden_closed_form);
    const std::string at = "b2/b1=" + fmt(1.0 / p.beta_ratio);
    o.require(da < 1e-3, at + " sta dev=" + fmt(da));
    o.require(dn < 1e-3, at + " sudden dev=" + fmt(dn));
  }
  return o;
}

Outcome criterion6() {
  Outcome o;
  const PhysicalConstants constants{1.0, 1.0 / (2.0 * std::numbers::pi)};
  std::vector<double> low;
  for (int k = 0; k <= 40; ++k) low.push_back(2.0 * std::pow(50.0, k / 40.0));
  double worst_ratio = 1e300;
  double at = 0.0;
  for (const auto& p : efficiency_curves(Regime::quantum, 10.0, 10.0, low, constants)) {
    const double r = p.eta_sta / p.eta_sudden;
    if (r < worst_ratio) {
      worst_ratio = r;
      at = p.beta_ratio;
    }
  }
  o.require(worst_ratio > 2.0, "min eta_sta/eta_sudden=" + fmt(worst_ratio) + " at b1/b2=" + fmt(at));

  const std::vector<double> high{1.5, 2, 3, 5, 7, 10, 15, 20, 30, 50, 70, 100};
  double worst = 0.0;
  for (const auto& p : efficiency_curves(Regime::quantum, 0.01, 10.0, high, constants)) {
    worst = std::max({worst, std::abs(p.eta_sta / p.eta_adiabatic_closed_form - 1.0),
                      std::abs(p.eta_sudden / p.eta_sudden_closed_form - 1.0)});
  }
  o.require(worst < 0.02, "b1=0.01 max relative deviation from classical=" + fmt(worst));
  return o;
}

Outcome criterion7() {
  Outcome o;
  for (const auto& c : verification_suite(VerifySettings{}, 7, 1)) {
    o.require(c.pass, c.name + "=" + fmt(c.value) + " (limit " + fmt(c.threshold) + ")");
  }
  return o;
}

}  // namespace

int main() {
  bool all = true;
  auto report = [&all](int n, const std::string& title, auto&& body) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = body();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << "exception: " << e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    all = all && o.pass;
    std::printf("%s criterion %d: %s -- %s(%.1fs)\n", o.pass ? "PASS" : "FAIL", n, title.c_str(),
                o.detail.str().c_str(), secs);
    std::fflush(stdout);
  };

  report(1, "classical work distributions", criterion1);
  report(2, "classical Jarzynski convergence", criterion2);
  const double alt_hbar = 1.0 / (2.0 * std::numbers::pi);
  QuantumSets primary;
  QuantumSets alternate;
  report(3, "quantum work atoms", [&] {
    primary = quantum_sets(1.0);
    alternate = quantum_sets(alt_hbar);
    return criterion3(primary, alternate, alt_hbar);
  });
  report(4, "quantum Jarzynski equality", [&] { return criterion4(primary); });
  report(5, "classical engine closed forms", criterion5);
  report(6, "quantum engine efficiencies", criterion6);
  report(7, "property suites", criterion7);
  return all ? 0 : 1;
}
