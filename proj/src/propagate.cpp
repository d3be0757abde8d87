#include "heom/propagate.hpp"

#include <cmath>
#include <complex>
#include <cstdio>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "heom/errors.hpp"

namespace heom {

namespace {

using cplx = std::complex<double>;

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

// Output every `out_every` integrator steps: the coarser of the stride grid
// and the dt grid, requiring an integer ratio when stride > dt.
long output_every(double dt, double stride) {
  if (stride <= dt) return 1;
  const double ratio = stride / dt;
  const long every = std::lround(ratio);
  if (every < 1 || std::abs(every - ratio) > 1e-9 * ratio)
    throw UsageError("output stride must be an integer multiple of dt (got stride " +
                     std::to_string(stride) + ", dt " + std::to_string(dt) + ")");
  return every;
}

void validate_initial_state(const Eigen::MatrixXcd& rho0, int n_sites) {
  if (rho0.rows() != n_sites || rho0.cols() != n_sites)
    throw UsageError("initial state dimension does not match the Hamiltonian");
  if (std::abs(rho0.trace() - 1.0) > 1e-10)
    throw UsageError("initial state must have unit trace");
  if ((rho0 - rho0.adjoint()).cwiseAbs().maxCoeff() > 1e-10)
    throw UsageError("initial state must be Hermitian");
}

// Index of the single occupied site when rho0 is |site><site|, else -1.
int detect_initial_site(const Eigen::MatrixXcd& rho0) {
  const int n = static_cast<int>(rho0.rows());
  int site = -1;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (i == j) {
        if (std::abs(rho0(i, i) - 1.0) < 1e-12) {
          if (site >= 0) return -1;
          site = i;
        } else if (std::abs(rho0(i, i)) > 1e-12) {
          return -1;
        }
      } else if (std::abs(rho0(i, j)) > 1e-12) {
        return -1;
      }
    }
  return site;
}

}  // namespace

Eigen::MatrixXcd site_state(int n_sites, int site) {
  if (site < 0 || site >= n_sites)
    throw UsageError("initial site " + std::to_string(site + 1) + " outside 1.." +
                     std::to_string(n_sites));
  Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(n_sites, n_sites);
  rho(site, site) = 1.0;
  return rho;
}

Eigen::MatrixXcd unitary_evolution(const ExcitonHamiltonian& h,
                                   const Eigen::MatrixXcd& rho0, double t_fs) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(h.matrix);
  const Eigen::MatrixXd& V = solver.eigenvectors();
  Eigen::VectorXcd phase(h.n_sites);
  for (int i = 0; i < h.n_sites; ++i) {
    const double w = units.to_angular(solver.eigenvalues()[i]) * t_fs;
    phase[i] = cplx(std::cos(w), -std::sin(w));
  }
  const Eigen::MatrixXcd U = V * phase.asDiagonal() * V.transpose();
  return U * rho0 * U.adjoint();
}

Trajectory propagate(const Eigen::MatrixXcd& rho0, const Hierarchy& hierarchy,
                     const PropagationConfig& config) {
  const int N = hierarchy.n_sites();
  validate_initial_state(rho0, N);
  if (!(config.dt > 0.0)) throw UsageError("dt must be positive");
  if (!(config.t_max >= 0.0)) throw UsageError("t_max must be non-negative");
  if (!(config.output_stride > 0.0)) throw UsageError("output stride must be positive");
  if (config.level != hierarchy.level())
    throw UsageError("config truncation level does not match the hierarchy");

  const double dt = config.dt;
  const long n_steps = std::lround(config.t_max / dt);
  if (std::abs(n_steps * dt - config.t_max) > 1e-6)
    throw UsageError("t_max must be an integer number of dt steps");
  const long out_every = output_every(dt, config.output_stride);

  Trajectory traj;
  traj.meta.n_sites = N;
  traj.meta.lambda = hierarchy.bath().lambda;
  traj.meta.gamma = hierarchy.bath().gamma;
  traj.meta.temperature = hierarchy.bath().temperature;
  traj.meta.n_matsubara = hierarchy.bath().n_matsubara;
  traj.meta.level = hierarchy.level();
  traj.meta.dt = dt;
  traj.meta.output_stride = out_every * dt;
  traj.meta.initial_site = detect_initial_site(rho0);
  traj.meta.diagonal_offset = hierarchy.hamiltonian().diagonal_offset;
  traj.meta.hamiltonian_checksum = hamiltonian_checksum(hierarchy.hamiltonian());
  traj.times.reserve(n_steps / out_every + 1);
  traj.states.reserve(n_steps / out_every + 1);

  const std::size_t size = hierarchy.state_size();
  std::vector<cplx> y(size, 0.0), stage(size), input(size), acc(size);
  for (int j = 0; j < N; ++j)
    for (int i = 0; i < N; ++i) y[i + j * N] = rho0(i, j);

  auto record = [&](double t) {
    Eigen::MatrixXcd state(N, N);
    double trace_re = 0.0, trace_im = 0.0;
    for (int j = 0; j < N; ++j)
      for (int i = 0; i < N; ++i) {
        const cplx v = y[i + j * N];
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
          throw DivergenceError(t, "NaN/Inf in the reduced density matrix at t = " +
                                       std::to_string(t) +
                                       " fs; reduce dt or raise the truncation level");
        state(i, j) = v;
        if (i == j) {
          trace_re += v.real();
          trace_im += v.imag();
        }
      }
    if (std::abs(trace_re - 1.0) > 1e-8 || std::abs(trace_im) > 1e-8)
      throw DivergenceError(t, "trace conservation broken at t = " + std::to_string(t) +
                                   " fs (drift " + sci(trace_re - 1.0) + ", imag " +
                                   sci(trace_im) + "); reduce dt or raise the truncation level");
    const double herm = (state - state.adjoint()).cwiseAbs().maxCoeff();
    if (herm > 1e-10)
      throw DivergenceError(t, "Hermiticity broken at t = " + std::to_string(t) +
                                   " fs (defect " + sci(herm) +
                                   "); reduce dt or raise the truncation level");
    for (int i = 0; i < N; ++i)
      traj.meta.max_negative_population =
          std::min(traj.meta.max_negative_population, state(i, i).real());
    traj.times.push_back(t);
    traj.states.push_back(std::move(state));
  };

  record(0.0);

  cplx* yp = y.data();
  cplx* kp = stage.data();
  cplx* tp = input.data();
  cplx* ap = acc.data();
  for (long step = 1; step <= n_steps; ++step) {
    hierarchy.rhs(yp, kp);
    for (std::size_t i = 0; i < size; ++i) {
      ap[i] = kp[i];
      tp[i] = yp[i] + (0.5 * dt) * kp[i];
    }
    hierarchy.rhs(tp, kp);
    for (std::size_t i = 0; i < size; ++i) {
      ap[i] += 2.0 * kp[i];
      tp[i] = yp[i] + (0.5 * dt) * kp[i];
    }
    hierarchy.rhs(tp, kp);
    for (std::size_t i = 0; i < size; ++i) {
      ap[i] += 2.0 * kp[i];
      tp[i] = yp[i] + dt * kp[i];
    }
    hierarchy.rhs(tp, kp);
    for (std::size_t i = 0; i < size; ++i) yp[i] += (dt / 6.0) * (ap[i] + kp[i]);

    if (step % out_every == 0) record(step * dt);
  }
  return traj;
}

namespace {

double max_population_delta(const Trajectory& a, const Trajectory& b) {
  const std::size_t n = std::min(a.states.size(), b.states.size());
  double delta = 0.0;
  for (std::size_t t = 0; t < n; ++t)
    delta = std::max(delta,
                     (a.states[t].diagonal().real() - b.states[t].diagonal().real())
                         .cwiseAbs()
                         .maxCoeff());
  return delta;
}

}  // namespace

ConvergenceResult converge(const ExcitonHamiltonian& h, const BathSpec& bath,
                           const Eigen::MatrixXcd& rho0,
                           const PropagationConfig& base_config, double tol_pop,
                           const ConvergenceBudget& budget,
                           const std::function<void(const ConvergenceStep&)>& on_step) {
  if (!(tol_pop > 0.0)) throw UsageError("population tolerance must be positive");

  auto run = [&](int level, int n_matsubara, double last_delta) {
    BathSpec b = bath;
    b.n_matsubara = n_matsubara;
    PropagationConfig c = base_config;
    c.level = level;
    try {
      Hierarchy hier(h, b, level, HierarchyBudget{budget.max_indices});
      return propagate(rho0, hier, c);
    } catch (const CapacityError& e) {
      throw ConvergenceBudgetError(
          last_delta, std::string("hierarchy budget exhausted before population "
                                  "convergence: ") +
                          e.what());
    }
  };

  ConvergenceResult result;
  int level = base_config.level;
  int n_matsubara = bath.n_matsubara;
  double last_delta = std::numeric_limits<double>::infinity();
  Trajectory current = run(level, n_matsubara, last_delta);

  // Without system-bath coupling every hierarchy is exact, so the ladder is a
  // single zero-delta row.
  if (bath.lambda == 0.0) {
    result.ladder.push_back({level, n_matsubara, 0.0});
    if (on_step) on_step(result.ladder.back());
    result.trajectory = std::move(current);
    result.level = level;
    result.n_matsubara = n_matsubara;
    return result;
  }

  for (;;) {
    if (level + 1 > budget.max_level)
      throw ConvergenceBudgetError(
          last_delta, "level budget (max " + std::to_string(budget.max_level) +
                          ") exhausted; last population delta " + std::to_string(last_delta));
    Trajectory next = run(level + 1, n_matsubara, last_delta);
    last_delta = max_population_delta(current, next);
    ++level;
    result.ladder.push_back({level, n_matsubara, last_delta});
    if (on_step) on_step(result.ladder.back());
    current = std::move(next);
    if (last_delta < tol_pop) break;
  }
  for (;;) {
    if (n_matsubara + 1 > budget.max_matsubara)
      throw ConvergenceBudgetError(
          last_delta, "Matsubara budget (max " + std::to_string(budget.max_matsubara) +
                          ") exhausted; last population delta " + std::to_string(last_delta));
    Trajectory next = run(level, n_matsubara + 1, last_delta);
    last_delta = max_population_delta(current, next);
    ++n_matsubara;
    result.ladder.push_back({level, n_matsubara, last_delta});
    if (on_step) on_step(result.ladder.back());
    current = std::move(next);
    if (last_delta < tol_pop) break;
  }

  result.trajectory = std::move(current);
  result.level = level;
  result.n_matsubara = n_matsubara;
  return result;
}

}  // namespace heom
