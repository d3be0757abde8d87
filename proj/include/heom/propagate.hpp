#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

#include "heom/hierarchy.hpp"

namespace heom {

struct PropagationConfig {
  double dt = 1.0;             // integrator step, fs
  double t_max = 2000.0;       // fs
  double output_stride = 1.0;  // fs; outputs land on the coarser of the
                               // stride grid and the dt grid
  int level = 4;               // hierarchy truncation depth L
};

// Full parameter record carried by every trajectory. Doubles are NaN and
// integers -1 where unknown (externally imported data).
struct TrajectoryMeta {
  int n_sites = 0;
  double lambda = 0.0;
  double gamma = 0.0;
  double temperature = 0.0;
  int n_matsubara = 0;
  int level = 0;
  double dt = 0.0;
  double output_stride = 0.0;
  int initial_site = -1;  // 0-based; -1 when the initial state is not a site state
  double diagonal_offset = 0.0;
  std::string hamiltonian_checksum;
  bool external = false;
  // Most negative population encountered at any output time (0 when none);
  // values below -1e-8 signal an unconverged run.
  double max_negative_population = 0.0;
};

struct Trajectory {
  std::vector<double> times;                // fs
  std::vector<Eigen::MatrixXcd> states;     // reduced density matrices
  TrajectoryMeta meta;
};

// Propagates rho0 (Hermitian, unit trace) with all auxiliary ADOs starting at
// zero, fixed-step RK4. Deterministic given (rho0, hierarchy, config).
// Throws DivergenceError on NaN/Inf or on a broken conservation law.
Trajectory propagate(const Eigen::MatrixXcd& rho0, const Hierarchy& hierarchy,
                     const PropagationConfig& config);

// |site><site| initial state, site 0-based.
Eigen::MatrixXcd site_state(int n_sites, int site);

// Exact unitary evolution by eigendecomposition; reference for lambda = 0.
Eigen::MatrixXcd unitary_evolution(const ExcitonHamiltonian& h,
                                   const Eigen::MatrixXcd& rho0, double t_fs);

struct ConvergenceStep {
  int level = 0;
  int n_matsubara = 0;
  double max_pop_delta = 0.0;  // vs the previous settings, -1 for the base run
};

struct ConvergenceBudget {
  int max_level = 12;
  int max_matsubara = 8;
  std::size_t max_indices = 400000;
};

struct ConvergenceResult {
  Trajectory trajectory;  // run at the converged settings
  std::vector<ConvergenceStep> ladder;
  int level = 0;
  int n_matsubara = 0;
};

// Raises the truncation level until the maximum absolute population
// difference between successive settings drops below tol_pop, then raises the
// Matsubara count the same way. Throws ConvergenceBudgetError (with the last
// delta) when the budget is exhausted first. on_step, when set, is called
// after each ladder comparison so callers can report progress of runs that
// take minutes per rung.
ConvergenceResult converge(const ExcitonHamiltonian& h, const BathSpec& bath,
                           const Eigen::MatrixXcd& rho0,
                           const PropagationConfig& base_config,
                           double tol_pop = 0.01,
                           const ConvergenceBudget& budget = {},
                           const std::function<void(const ConvergenceStep&)>& on_step = {});

}  // namespace heom
