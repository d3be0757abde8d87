#pragma once

#include <Eigen/Dense>
#include <vector>

#include "heom/propagate.hpp"

namespace heom {

// Unordered site pair, 0-based.
struct SitePair {
  int a = 0;
  int b = 0;
};

// Default concurrence pairs 1-2, 1-3, 3-4 (1-based site labels).
std::vector<SitePair> default_pairs();

// Von Neumann entropy S = -sum_i p_i ln p_i in nats. Eigenvalues in
// [-1e-9, 0) are clamped to zero; anything below rejects the state as
// unconverged rather than silently repairing it.
double von_neumann_entropy(const Eigen::MatrixXcd& rho);

// Global entanglement E = -sum_n rho_nn ln rho_nn - S(rho), nats.
// Non-negative for every valid state in the single-excitation manifold.
double global_entanglement(const Eigen::MatrixXcd& rho);

// Pairwise concurrence C_ab = 2|rho_ab|, a != b.
double concurrence(const Eigen::MatrixXcd& rho, int a, int b);

// Coherence length L = (sum_{nk} |rho_nk|)^2 / (N sum_{nk} |rho_nk|^2),
// site basis, diagonal included; ranges 1/N (pure site state) to N (uniform
// pure superposition).
double coherence_length(const Eigen::MatrixXcd& rho);

struct MeasureSeries {
  std::vector<double> times;  // fs
  std::vector<double> global_entanglement;
  std::vector<double> entropy;
  std::vector<double> coherence_length;
  std::vector<SitePair> pairs;
  std::vector<std::vector<double>> concurrences;  // one series per pair
  TrajectoryMeta meta;
};

// Applies all measures along a trajectory. Invalid states raise
// InvalidStateError carrying the offending time; NaN is never emitted.
MeasureSeries trajectory_measures(const Trajectory& traj,
                                  const std::vector<SitePair>& pairs = default_pairs());

// Magnitude table |rho_nk| at one output time with sub-threshold entries
// flagged for the report layer; exact values retained alongside.
struct DensitySnapshot {
  double t_requested = 0.0;
  double t_actual = 0.0;
  bool off_grid = false;  // t_requested was not on the output grid
  double threshold = 0.0;
  Eigen::MatrixXd magnitude;
  Eigen::MatrixXcd exact;
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> flagged;
};

DensitySnapshot density_snapshot(const Trajectory& traj, double t,
                                 double threshold = 0.005);

}  // namespace heom
