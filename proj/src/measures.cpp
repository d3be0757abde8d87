#include "heom/measures.hpp"

#include <cmath>
#include <string>

#include "heom/errors.hpp"

namespace heom {

namespace {

// Negative eigenvalues and populations inside this window are truncation
// roundoff and clamp to zero; anything below marks an unconverged state.
constexpr double kClampWindow = 1e-9;

void validate_state(const Eigen::MatrixXcd& rho) {
  if (rho.rows() != rho.cols() || rho.rows() < 1)
    throw InvalidStateError("density matrix must be square");
  if ((rho - rho.adjoint()).cwiseAbs().maxCoeff() > 1e-6)
    throw InvalidStateError("density matrix is not Hermitian within 1e-6");
  if (std::abs(rho.trace() - 1.0) > 1e-6)
    throw InvalidStateError("density matrix trace deviates from 1 beyond 1e-6");
}

double clamped_entropy_term(double p, const char* what) {
  if (p < -kClampWindow)
    throw InvalidStateError(std::string(what) + " " + std::to_string(p) +
                            " below the -1e-9 clamping window; state looks unconverged");
  if (p <= 0.0) return 0.0;  // 0 ln 0 = 0
  return -p * std::log(p);
}

}  // namespace

std::vector<SitePair> default_pairs() { return {{0, 1}, {0, 2}, {2, 3}}; }

double von_neumann_entropy(const Eigen::MatrixXcd& rho) {
  validate_state(rho);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(rho, Eigen::EigenvaluesOnly);
  double s = 0.0;
  for (int i = 0; i < rho.rows(); ++i)
    s += clamped_entropy_term(solver.eigenvalues()[i], "eigenvalue");
  return s;
}

double global_entanglement(const Eigen::MatrixXcd& rho) {
  double diagonal_entropy = 0.0;
  for (int i = 0; i < rho.rows(); ++i)
    diagonal_entropy += clamped_entropy_term(rho(i, i).real(), "population");
  const double e = diagonal_entropy - von_neumann_entropy(rho);
  // The diagonal is majorized by the spectrum, so E >= 0 up to eigensolver
  // roundoff; clamp only that noise floor.
  return (e < 0.0 && e > -1e-12) ? 0.0 : e;
}

double concurrence(const Eigen::MatrixXcd& rho, int a, int b) {
  if (a == b) throw UsageError("concurrence needs two distinct sites");
  if (a < 0 || b < 0 || a >= rho.rows() || b >= rho.rows())
    throw UsageError("concurrence site index outside 1.." + std::to_string(rho.rows()));
  return 2.0 * std::abs(rho(a, b));
}

double coherence_length(const Eigen::MatrixXcd& rho) {
  validate_state(rho);
  const double sum_abs = rho.cwiseAbs().sum();
  const double sum_sq = rho.cwiseAbs2().sum();
  if (sum_sq == 0.0) throw InvalidStateError("coherence length undefined for an all-zero matrix");
  return sum_abs * sum_abs / (rho.rows() * sum_sq);
}

MeasureSeries trajectory_measures(const Trajectory& traj,
                                  const std::vector<SitePair>& pairs) {
  MeasureSeries series;
  series.meta = traj.meta;
  series.pairs = pairs;
  series.times = traj.times;
  const std::size_t n = traj.times.size();
  series.global_entanglement.reserve(n);
  series.entropy.reserve(n);
  series.coherence_length.reserve(n);
  series.concurrences.assign(pairs.size(), {});
  for (auto& c : series.concurrences) c.reserve(n);

  for (std::size_t t = 0; t < n; ++t) {
    // Measure the Hermitian representative a trajectory file stores (real
    // diagonal, lower triangle mirrored from the upper) so that measures
    // computed in-process and from a reloaded file agree bit for bit.
    Eigen::MatrixXcd rho = traj.states[t];
    for (Eigen::Index i = 0; i < rho.rows(); ++i) {
      rho(i, i) = rho(i, i).real();
      for (Eigen::Index j = i + 1; j < rho.cols(); ++j) rho(j, i) = std::conj(rho(i, j));
    }
    try {
      series.entropy.push_back(von_neumann_entropy(rho));
      series.global_entanglement.push_back(global_entanglement(rho));
      series.coherence_length.push_back(coherence_length(rho));
      for (std::size_t p = 0; p < pairs.size(); ++p)
        series.concurrences[p].push_back(concurrence(rho, pairs[p].a, pairs[p].b));
    } catch (const InvalidStateError& e) {
      throw InvalidStateError("at t = " + std::to_string(traj.times[t]) + " fs (sample " +
                              std::to_string(t) + "): " + e.what());
    }
  }
  return series;
}

DensitySnapshot density_snapshot(const Trajectory& traj, double t, double threshold) {
  if (traj.times.empty()) throw UsageError("empty trajectory");
  std::size_t best = 0;
  for (std::size_t i = 1; i < traj.times.size(); ++i)
    if (std::abs(traj.times[i] - t) < std::abs(traj.times[best] - t)) best = i;

  DensitySnapshot snap;
  snap.t_requested = t;
  snap.t_actual = traj.times[best];
  snap.off_grid = std::abs(snap.t_actual - t) > 1e-9;
  snap.threshold = threshold;
  snap.exact = traj.states[best];
  snap.magnitude = snap.exact.cwiseAbs();
  const int n = static_cast<int>(snap.exact.rows());
  snap.flagged.resize(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) snap.flagged(i, j) = snap.magnitude(i, j) < threshold;
  return snap;
}

}  // namespace heom
