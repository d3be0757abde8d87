#include "heom/validate.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <iomanip>
#include <limits>
#include <map>
#include <ostream>
#include <random>
#include <sstream>
#include <utility>

#include <Eigen/Dense>

#include "heom/correlation.hpp"
#include "heom/errors.hpp"
#include "heom/hierarchy.hpp"
#include "heom/measures.hpp"
#include "heom/model.hpp"
#include "heom/propagate.hpp"
#include "heom/units.hpp"

namespace heom {

namespace {

struct QualPoint {
  const char* label;
  double lambda;
  double gamma;
  double temperature;
  int level;
  int n_matsubara;
};

// Desk-scale reproduction set: three temperatures crossed with the two
// bath-cutoff extremes of the default grids at lambda = 40. The strict 1%
// population ladder is out of reach at gamma = 25 (its L phase alone settles
// at L = 11 and the following K phase overruns the hierarchy size budget), so
// the (L, K) settings below were instead fixed offline by raising L and K one
// rung at a time until the features these checks score (initial rise,
// oscillation count, tail-mean E, peak L_rho) agreed with the next deeper
// rung to a few percent and the positivity gate accepted the whole 2 ps
// trajectory. The slow bath tolerates K = 0 (its Matsubara modes are far
// faster than gamma and land in the terminator); the fast bath at 70 K needs
// K = 3 because nu_1 falls below gamma there and nu_2 barely above it.
constexpr QualPoint kQualitativeSet[6] = {
    {"lam40_gam25_T70", 40.0, 25.0, 70.0, 6, 0},
    {"lam40_gam500_T70", 40.0, 500.0, 70.0, 3, 3},
    {"lam40_gam25_T310", 40.0, 25.0, 310.0, 6, 0},
    {"lam40_gam500_T310", 40.0, 500.0, 310.0, 4, 1},
    {"lam40_gam25_T490", 40.0, 25.0, 490.0, 7, 0},
    {"lam40_gam500_T490", 40.0, 500.0, 490.0, 4, 1},
};

// Weak-coupling point where the exciton stays delocalized the longest,
// calibrated the same way.
constexpr QualPoint kWeakCouplingPoint = {"lam10_gam25_T310", 10.0, 25.0, 310.0, 5, 0};

std::string sci(double v) {
  std::ostringstream ss;
  ss << std::scientific << std::setprecision(2) << v;
  return ss.str();
}

struct Session {
  std::ostream* progress = nullptr;
  std::vector<std::pair<std::string, Trajectory>> trajectories;
  std::map<std::string, MeasureSeries> qualitative;

  void note(const std::string& msg) const {
    if (progress) *progress << msg << std::flush;
  }
};

const MeasureSeries& ensure_qualitative_run(Session& s, const QualPoint& p) {
  auto it = s.qualitative.find(p.label);
  if (it != s.qualitative.end()) return it->second;

  std::ostringstream banner;
  banner << "    running " << p.label << " (L=" << p.level << ", K=" << p.n_matsubara << ")\n";
  s.note(banner.str());

  const ExcitonHamiltonian h = fmo_hamiltonian();
  const BathSpec bath{p.lambda, p.gamma, p.temperature, p.n_matsubara};
  const Hierarchy hierarchy(h, bath, p.level, HierarchyBudget{});
  PropagationConfig config;
  config.dt = 1.0;
  config.t_max = 2000.0;
  config.output_stride = 1.0;
  config.level = p.level;

  Trajectory traj = propagate(site_state(h.n_sites, 0), hierarchy, config);
  MeasureSeries series = trajectory_measures(traj);
  s.trajectories.emplace_back(p.label, std::move(traj));
  return s.qualitative.emplace(p.label, std::move(series)).first->second;
}

// Counts completed peaks of y with a hysteresis band: a peak registers once
// the signal has risen at least delta above the preceding valley and then
// dropped at least delta below the running maximum.
int count_oscillations(const std::vector<double>& y, double delta) {
  if (y.empty() || delta <= 0.0) return 0;
  int peaks = 0;
  double hi = y.front(), lo = y.front();
  bool rising = true;
  for (double v : y) {
    if (rising) {
      if (v > hi) hi = v;
      if (hi - v >= delta) {
        ++peaks;
        rising = false;
        lo = v;
      }
    } else {
      if (v < lo) lo = v;
      if (v - lo >= delta) {
        rising = true;
        hi = v;
      }
    }
  }
  return peaks;
}

double mean_tail(const MeasureSeries& series, const std::vector<double>& values,
                 double t_from) {
  double sum = 0.0;
  int count = 0;
  for (std::size_t i = 0; i < series.times.size(); ++i)
    if (series.times[i] >= t_from) {
      sum += values[i];
      ++count;
    }
  return count ? sum / count : 0.0;
}

CheckResult check_average_gap() {
  CheckResult r{1, "average energy gap", false, "", 0.0};
  const double g = average_energy_gap(fmo_hamiltonian());
  r.passed = std::abs(g - 157.17) <= 0.01;
  std::ostringstream ss;
  ss << "g = " << std::setprecision(8) << g << " cm^-1, expected 157.17 +/- 0.01";
  r.detail = ss.str();
  return r;
}

CheckResult check_coherence_length_limits() {
  CheckResult r{2, "coherence-length limits", false, "", 0.0};
  const int n = 8;
  const Eigen::MatrixXcd maximally_mixed = Eigen::MatrixXcd::Identity(n, n) / double(n);
  const Eigen::MatrixXcd fully_coherent = Eigen::MatrixXcd::Ones(n, n) / double(n);
  const double d1 = std::abs(coherence_length(maximally_mixed) - 1.0);
  const double d2 = std::abs(coherence_length(fully_coherent) - double(n));
  const double d3 = std::abs(coherence_length(site_state(n, 0)) - 1.0 / n);
  r.passed = d1 <= 1e-12 && d2 <= 1e-12 && d3 <= 1e-12;
  r.detail = "deviations from {1, 8, 1/8}: " + sci(d1) + ", " + sci(d2) + ", " + sci(d3) +
             " (tolerance 1e-12)";
  return r;
}

CheckResult check_entanglement_limits() {
  CheckResult r{3, "entanglement-measure limits", false, "", 0.0};
  const int n = 8;

  double worst_site = 0.0;
  for (int i = 0; i < n; ++i)
    worst_site = std::max(worst_site, std::abs(global_entanglement(site_state(n, i))));
  const Eigen::MatrixXcd mixed = Eigen::MatrixXcd::Identity(n, n) / double(n);
  const double dev_mixed = std::abs(global_entanglement(mixed));
  const Eigen::VectorXcd v = Eigen::VectorXcd::Constant(n, 1.0 / std::sqrt(double(n)));
  const double dev_uniform = std::abs(global_entanglement(v * v.adjoint()) - std::log(double(n)));

  std::mt19937_64 rng(20240817);
  std::normal_distribution<double> gauss;
  double min_random = std::numeric_limits<double>::infinity();
  Eigen::MatrixXcd a(n, n);
  for (int trial = 0; trial < 100000; ++trial) {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) a(i, j) = std::complex<double>(gauss(rng), gauss(rng));
    Eigen::MatrixXcd rho = a * a.adjoint();
    rho /= rho.trace().real();
    min_random = std::min(min_random, global_entanglement(rho));
  }

  r.passed = worst_site <= 1e-10 && dev_mixed <= 1e-10 && dev_uniform <= 1e-10 &&
             min_random >= 0.0;
  r.detail = "site-state |E| <= " + sci(worst_site) + ", mixed |E| = " + sci(dev_mixed) +
             ", uniform |E - ln 8| = " + sci(dev_uniform) + ", min E over 1e5 random states = " +
             sci(min_random);
  return r;
}

CheckResult check_unitary_oracle(Session& s) {
  CheckResult r{4, "unitary oracle", false, "", 0.0};
  const ExcitonHamiltonian h = fmo_hamiltonian();
  const BathSpec bath{0.0, 100.0, 310.0, 0};
  const Hierarchy hierarchy(h, bath, 0, HierarchyBudget{});
  PropagationConfig config;
  config.dt = 0.2;
  config.t_max = 1000.0;
  config.output_stride = 100.0;
  config.level = 0;

  Trajectory traj = propagate(site_state(h.n_sites, 0), hierarchy, config);
  const Eigen::MatrixXcd exact = unitary_evolution(h, site_state(h.n_sites, 0), 1000.0);
  const double err = (traj.states.back() - exact).cwiseAbs().maxCoeff();
  r.passed = err <= 1e-6;
  r.detail = "max elementwise deviation from matrix-exponential propagation at 1 ps: " + sci(err) +
             " (tolerance 1e-6)";
  s.trajectories.emplace_back("unitary_limit", std::move(traj));
  return r;
}

CheckResult check_pure_dephasing(Session& s) {
  CheckResult r{5, "pure-dephasing population freeze", false, "", 0.0};
  ExcitonHamiltonian h = fmo_hamiltonian();
  const Eigen::VectorXd site_energies = h.matrix.diagonal();
  h.matrix = site_energies.asDiagonal();

  const BathSpec bath{160.0, 100.0, 310.0, 1};
  const Hierarchy hierarchy(h, bath, 3, HierarchyBudget{});
  PropagationConfig config;
  config.dt = 1.0;
  config.t_max = 2000.0;
  config.output_stride = 10.0;
  config.level = 3;

  const Eigen::VectorXcd v = Eigen::VectorXcd::Constant(h.n_sites, 1.0 / std::sqrt(8.0));
  Trajectory traj = propagate(v * v.adjoint(), hierarchy, config);

  double drift = 0.0;
  for (const auto& rho : traj.states)
    for (int i = 0; i < h.n_sites; ++i)
      drift = std::max(drift, std::abs(rho(i, i).real() - traj.states.front()(i, i).real()));
  r.passed = drift <= 1e-10;
  r.detail = "max population drift over 2 ps with couplings removed: " + sci(drift) +
             " (tolerance 1e-10)";
  s.trajectories.emplace_back("pure_dephasing", std::move(traj));
  return r;
}

CheckResult check_conservation(Session& s) {
  CheckResult r{6, "conservation suite", false, "", 0.0};
  if (s.trajectories.empty()) {
    s.note("    no session trajectories yet, running the built-in short trajectory\n");
    const ExcitonHamiltonian h = fmo_hamiltonian();
    const BathSpec bath{40.0, 100.0, 310.0, 0};
    const Hierarchy hierarchy(h, bath, 3, HierarchyBudget{});
    PropagationConfig config;
    config.dt = 1.0;
    config.t_max = 500.0;
    config.output_stride = 1.0;
    config.level = 3;
    s.trajectories.emplace_back("builtin_short",
                                propagate(site_state(h.n_sites, 0), hierarchy, config));
  }

  double worst_trace = 0.0, worst_herm = 0.0;
  std::size_t audited = 0;
  for (const auto& [label, traj] : s.trajectories)
    for (const auto& rho : traj.states) {
      worst_trace = std::max(worst_trace, std::abs(rho.trace().real() - 1.0) +
                                              std::abs(rho.trace().imag()));
      worst_herm =
          std::max(worst_herm, (rho - rho.adjoint()).cwiseAbs().maxCoeff());
      ++audited;
    }
  r.passed = worst_trace < 1e-8 && worst_herm < 1e-10;
  r.detail = "audited " + std::to_string(s.trajectories.size()) + " trajectories (" +
             std::to_string(audited) + " states): max trace drift " + sci(worst_trace) +
             " (< 1e-8), max Hermiticity defect " + sci(worst_herm) + " (< 1e-10)";
  return r;
}

CheckResult check_convergence_protocol(Session& s) {
  CheckResult r{7, "convergence protocol", false, "", 0.0};
  const ExcitonHamiltonian h = fmo_hamiltonian();
  const BathSpec bath{40.0, 100.0, 310.0, 0};
  PropagationConfig base;
  base.dt = 1.0;
  base.t_max = 2000.0;
  base.output_stride = 10.0;
  base.level = 1;

  try {
    ConvergenceResult res =
        converge(h, bath, site_state(h.n_sites, 0), base, 0.01, ConvergenceBudget{});
    std::ostringstream ss;
    ss << "ladder";
    for (const auto& step : res.ladder)
      ss << " (L=" << step.level << ", K=" << step.n_matsubara
         << ", delta=" << sci(step.max_pop_delta) << ")";
    ss << "; settled at L=" << res.level << ", K=" << res.n_matsubara << " (tolerance 0.01)";
    r.detail = ss.str();
    r.passed = true;
    s.trajectories.emplace_back("converged_lam40_gam100_T310", std::move(res.trajectory));
  } catch (const ConvergenceBudgetError& err) {
    r.detail = std::string("ladder exhausted the budget: ") + err.what();
  }
  return r;
}

CheckResult check_correlation_oracle() {
  CheckResult r{8, "correlation-function oracle", false, "", 0.0};
  const double lambda = 50.0, gamma = 100.0;
  const double gamma_rad = gamma * units.cm1_to_rad_per_fs;
  const double scale = lambda * gamma;

  std::ostringstream detail;
  detail << "max relative reconstruction error (K=10):";
  bool rec_ok = true;
  double worst_im = 0.0;
  for (double beta_gamma : {0.1, 1.0, 10.0}) {
    const double temperature = gamma / (units.k_B * beta_gamma);
    const BathSpec bath{lambda, gamma, temperature, 10};
    const MatsubaraExpansion expansion = matsubara_expansion(bath);

    double worst = 0.0;
    const double tau_lo = 0.1 / gamma_rad, tau_hi = 5.0 / gamma_rad;
    const int samples = 21;
    for (int i = 0; i < samples; ++i) {
      const double tau = tau_lo * std::pow(tau_hi / tau_lo, double(i) / (samples - 1));
      const std::complex<double> rec = expansion.reconstruct(tau);
      const std::complex<double> ref = bath_correlation(tau, bath);
      worst = std::max(worst, std::abs(rec - ref) / std::abs(ref));
      const double im_exact = -scale * std::exp(-gamma_rad * tau);
      worst_im = std::max(worst_im, std::abs(rec.imag() - im_exact) / scale);
    }
    detail << " " << sci(worst) << " (beta*gamma=" << beta_gamma << ")";
    rec_ok = rec_ok && worst < 1e-3;
  }
  detail << "; imaginary part vs -lambda*gamma*exp(-gamma*tau): " << sci(worst_im)
         << " of lambda*gamma (tolerance 1e-6)";
  r.passed = rec_ok && worst_im <= 1e-6;
  r.detail = detail.str();
  return r;
}

CheckResult check_qualitative_reproduction(Session& s) {
  CheckResult r{9, "qualitative reproduction", false, "", 0.0};

  bool rises = true;
  std::string slow_riser;
  double worst_early_fraction = 1.0;
  int best_oscillations = 0;
  double tail_small_ratio = 0.0, tail_large_ratio = 0.0;

  for (const QualPoint& p : kQualitativeSet) {
    const MeasureSeries& series = ensure_qualitative_run(s, p);
    const auto& e = series.global_entanglement;
    const double peak = *std::max_element(e.begin(), e.end());
    double early = 0.0;
    for (std::size_t i = 0; i < series.times.size() && series.times[i] <= 200.0; ++i)
      early = std::max(early, e[i]);
    const double fraction = peak > 0.0 ? early / peak : 0.0;
    if (e.front() > 1e-10 || fraction < 0.25) {
      rises = false;
      slow_riser = p.label;
    }
    worst_early_fraction = std::min(worst_early_fraction, fraction);

    if (p.temperature == 70.0)
      best_oscillations = std::max(best_oscillations, count_oscillations(e, 0.02 * peak));
    if (p.temperature == 490.0) {
      const double tail = mean_tail(series, e, 1800.0);
      if (p.gamma == 25.0) tail_small_ratio = tail;
      if (p.gamma == 500.0) tail_large_ratio = tail;
    }
  }

  const bool growth_with_ratio = tail_large_ratio > tail_small_ratio;
  const bool oscillates = best_oscillations >= 3;
  r.passed = rises && growth_with_ratio && oscillates;

  std::ostringstream ss;
  ss << "(a) within 200 fs every run reaches >= " << std::fixed << std::setprecision(2)
     << worst_early_fraction << " of its peak E from E(0) = 0"
     << (rises ? "" : " [FAILED at " + slow_riser + "]") << "; (b) long-time E at T=490: "
     << sci(tail_large_ratio) << " (gamma=500) vs " << sci(tail_small_ratio)
     << " (gamma=25); (c) " << best_oscillations << " oscillations at T=70 (need >= 3)";
  r.detail = ss.str();
  return r;
}

CheckResult check_coherence_ceiling(Session& s) {
  CheckResult r{10, "coherence-length ceiling", false, "", 0.0};
  double worst = 0.0;
  std::string worst_label;

  auto scan = [&](const QualPoint& p) {
    const MeasureSeries& series = ensure_qualitative_run(s, p);
    const double peak =
        *std::max_element(series.coherence_length.begin(), series.coherence_length.end());
    if (peak > worst) {
      worst = peak;
      worst_label = p.label;
    }
  };
  for (const QualPoint& p : kQualitativeSet) scan(p);
  scan(kWeakCouplingPoint);

  r.passed = worst < 4.0;
  std::ostringstream ss;
  ss << "max_t L_rho over all 7 runs = " << std::setprecision(4) << worst << " at " << worst_label
     << " (ceiling 4)";
  r.detail = ss.str();
  return r;
}

CheckResult dispatch(int criterion, Session& s) {
  switch (criterion) {
    case 1:
      return check_average_gap();
    case 2:
      return check_coherence_length_limits();
    case 3:
      return check_entanglement_limits();
    case 4:
      return check_unitary_oracle(s);
    case 5:
      return check_pure_dephasing(s);
    case 6:
      return check_conservation(s);
    case 7:
      return check_convergence_protocol(s);
    case 8:
      return check_correlation_oracle();
    case 9:
      return check_qualitative_reproduction(s);
    case 10:
      return check_coherence_ceiling(s);
    default:
      throw UsageError("unknown acceptance criterion " + std::to_string(criterion) +
                       " (valid: 1..10)");
  }
}

}  // namespace

std::vector<CheckResult> run_validation(const std::vector<int>& criteria,
                                        std::ostream* progress) {
  std::vector<int> wanted = criteria;
  if (wanted.empty())
    for (int c = 1; c <= 10; ++c) wanted.push_back(c);
  std::sort(wanted.begin(), wanted.end());
  wanted.erase(std::unique(wanted.begin(), wanted.end()), wanted.end());
  for (int c : wanted)
    if (c < 1 || c > 10)
      throw UsageError("unknown acceptance criterion " + std::to_string(c) + " (valid: 1..10)");

  // The conservation audit goes last so it sees every trajectory produced by
  // the other checks.
  std::vector<int> order = wanted;
  if (auto it = std::find(order.begin(), order.end(), 6); it != order.end()) {
    order.erase(it);
    order.push_back(6);
  }

  Session session;
  session.progress = progress;

  std::vector<CheckResult> results;
  results.reserve(order.size());
  for (int c : order) {
    session.note("criterion " + std::to_string(c) + ": running\n");
    const auto start = std::chrono::steady_clock::now();
    CheckResult r;
    try {
      r = dispatch(c, session);
    } catch (const UsageError&) {
      throw;
    } catch (const std::exception& err) {
      r.criterion = c;
      r.name = "criterion " + std::to_string(c);
      r.passed = false;
      r.detail = std::string("unexpected error: ") + err.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    session.note("criterion " + std::to_string(c) + ": " + (r.passed ? "PASS" : "FAIL") + "\n");
    results.push_back(std::move(r));
  }
  std::sort(results.begin(), results.end(),
            [](const CheckResult& a, const CheckResult& b) { return a.criterion < b.criterion; });
  return results;
}

bool print_validation_report(const std::vector<CheckResult>& results, std::ostream& out) {
  bool all_passed = true;
  for (const auto& r : results) {
    out << "criterion " << r.criterion << " (" << r.name << "): "
        << (r.passed ? "PASS" : "FAIL") << " - " << r.detail << " [" << std::fixed
        << std::setprecision(1) << r.seconds << " s]\n";
    out.unsetf(std::ios::floatfield);
    all_passed = all_passed && r.passed;
  }
  out << (all_passed ? "validation: all criteria passed"
                     : "validation: at least one criterion failed")
      << "\n";
  return all_passed;
}

}  // namespace heom
