#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <complex>
#include <random>

#include <Eigen/Dense>

#include "heom/errors.hpp"
#include "heom/hierarchy.hpp"
#include "heom/measures.hpp"
#include "heom/model.hpp"
#include "heom/propagate.hpp"
#include "heom/units.hpp"

using namespace heom;

namespace {

Eigen::MatrixXcd diagonal_state(const std::vector<double>& populations) {
  const int n = static_cast<int>(populations.size());
  Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(n, n);
  for (int i = 0; i < n; ++i) rho(i, i) = populations[i];
  return rho;
}

Eigen::MatrixXcd uniform_superposition(int n) {
  const Eigen::VectorXcd v = Eigen::VectorXcd::Constant(n, 1.0 / std::sqrt(double(n)));
  return v * v.adjoint();
}

double binary_entropy(double p) { return -p * std::log(p) - (1.0 - p) * std::log(1.0 - p); }

}  // namespace

TEST_CASE("entropy of pure, mixed, and two-level states") {
  CHECK(von_neumann_entropy(site_state(8, 0)) == 0.0);
  CHECK(von_neumann_entropy(Eigen::MatrixXcd::Identity(8, 8) / 8.0) ==
        doctest::Approx(std::log(8.0)).epsilon(1e-13));
  CHECK(von_neumann_entropy(diagonal_state({0.3, 0.7})) ==
        doctest::Approx(binary_entropy(0.3)).epsilon(1e-13));
}

TEST_CASE("eigenvalues just below zero are clamped, further below rejected") {
  CHECK(std::abs(von_neumann_entropy(diagonal_state({1.0 + 1e-10, -1e-10}))) <= 1e-9);
  CHECK_THROWS_AS(von_neumann_entropy(diagonal_state({1.000001, -0.000001})),
                  InvalidStateError);
}

TEST_CASE("state validation is lenient but bounded") {
  Eigen::MatrixXcd off_trace = site_state(8, 0);
  off_trace(0, 0) += 5e-7;
  CHECK_NOTHROW(von_neumann_entropy(off_trace));
  off_trace(0, 0) += 2e-6;
  CHECK_THROWS_AS(von_neumann_entropy(off_trace), InvalidStateError);

  Eigen::MatrixXcd skew = site_state(8, 0);
  skew(0, 1) = std::complex<double>(2e-6, 0.0);
  CHECK_THROWS_AS(von_neumann_entropy(skew), InvalidStateError);
  CHECK_THROWS_AS(coherence_length(Eigen::MatrixXcd::Zero(8, 8)), InvalidStateError);
}

TEST_CASE("global entanglement limits") {
  for (int i = 0; i < 8; ++i) CHECK(global_entanglement(site_state(8, i)) == 0.0);
  CHECK(std::abs(global_entanglement(Eigen::MatrixXcd::Identity(8, 8) / 8.0)) < 1e-10);
  CHECK(global_entanglement(uniform_superposition(8)) ==
        doctest::Approx(std::log(8.0)).epsilon(1e-12));

  // pure superposition over two of eight sites
  Eigen::MatrixXcd two = Eigen::MatrixXcd::Zero(8, 8);
  two(0, 0) = two(1, 1) = two(0, 1) = two(1, 0) = 0.5;
  CHECK(global_entanglement(two) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("global entanglement is non-negative on random mixed states") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> gauss;
  Eigen::MatrixXcd a(8, 8);
  for (int trial = 0; trial < 2000; ++trial) {
    for (int i = 0; i < 8; ++i)
      for (int j = 0; j < 8; ++j) a(i, j) = std::complex<double>(gauss(rng), gauss(rng));
    Eigen::MatrixXcd rho = a * a.adjoint();
    rho /= rho.trace().real();
    CHECK(global_entanglement(rho) >= 0.0);
  }
}

TEST_CASE("concurrence is twice the coherence magnitude") {
  CHECK(concurrence(uniform_superposition(8), 0, 1) == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(concurrence(site_state(8, 0), 0, 1) == 0.0);
  Eigen::MatrixXcd rho = site_state(8, 0);
  rho(2, 5) = std::complex<double>(3e-3, -4e-3);
  rho(5, 2) = std::conj(rho(2, 5));
  CHECK(concurrence(rho, 2, 5) == doctest::Approx(1e-2).epsilon(1e-12));
  CHECK(concurrence(rho, 5, 2) == doctest::Approx(1e-2).epsilon(1e-12));

  CHECK_THROWS_AS(concurrence(rho, 3, 3), UsageError);
  CHECK_THROWS_AS(concurrence(rho, 0, 8), UsageError);
}

TEST_CASE("coherence length limits and scaling") {
  CHECK(coherence_length(Eigen::MatrixXcd::Identity(8, 8) / 8.0) ==
        doctest::Approx(1.0).epsilon(1e-14));
  CHECK(coherence_length(uniform_superposition(8)) == doctest::Approx(8.0).epsilon(1e-14));
  CHECK(coherence_length(site_state(8, 0)) == doctest::Approx(0.125).epsilon(1e-14));

  // delocalization over exactly two of eight sites
  Eigen::MatrixXcd two = Eigen::MatrixXcd::Zero(8, 8);
  two(0, 0) = two(1, 1) = two(0, 1) = two(1, 0) = 0.5;
  CHECK(coherence_length(two) == doctest::Approx(2.0 / 8.0 * 2.0).epsilon(1e-14));
}

TEST_CASE("default concurrence pairs are 1-2, 1-3, 3-4") {
  const auto pairs = default_pairs();
  REQUIRE(pairs.size() == 3);
  CHECK((pairs[0].a == 0 && pairs[0].b == 1));
  CHECK((pairs[1].a == 0 && pairs[1].b == 2));
  CHECK((pairs[2].a == 2 && pairs[2].b == 3));
}

TEST_CASE("measure series along a unitary dimer trajectory") {
  ExcitonHamiltonian h;
  h.n_sites = 2;
  h.matrix.resize(2, 2);
  h.matrix << 0.0, 50.0, 50.0, 0.0;
  const Hierarchy hier(h, BathSpec{0.0, 50.0, 310.0, 0}, 0);
  PropagationConfig pc;
  pc.dt = 0.1;
  pc.t_max = 300.0;
  pc.output_stride = 15.0;
  pc.level = 0;
  const Trajectory traj = propagate(site_state(2, 0), hier, pc);

  const MeasureSeries series = trajectory_measures(traj, {{0, 1}});
  REQUIRE(series.times.size() == traj.times.size());
  REQUIRE(series.concurrences.size() == 1);
  CHECK(series.meta.hamiltonian_checksum == traj.meta.hamiltonian_checksum);

  const double omega = 50.0 * units.cm1_to_rad_per_fs;
  for (std::size_t i = 0; i < series.times.size(); ++i) {
    const double c2 = std::pow(std::cos(omega * series.times[i]), 2);
    CHECK(series.entropy[i] <= 1e-9);
    if (c2 > 1e-6 && c2 < 1.0 - 1e-6)
      CHECK(series.global_entanglement[i] == doctest::Approx(binary_entropy(c2)).epsilon(1e-6));
    CHECK(series.concurrences[0][i] ==
          doctest::Approx(std::abs(std::sin(2.0 * omega * series.times[i]))).epsilon(1e-8));
  }

  // default pairs reference sites beyond a dimer
  CHECK_THROWS_AS(trajectory_measures(traj), UsageError);
}

TEST_CASE("invalid states are reported with their time") {
  Trajectory traj;
  traj.meta.n_sites = 2;
  traj.times = {0.0, 10.0};
  traj.states = {site_state(2, 0), diagonal_state({1.00001, -0.00001})};
  try {
    trajectory_measures(traj, {{0, 1}});
    FAIL("expected an invalid-state error");
  } catch (const InvalidStateError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("10") != std::string::npos);
    CHECK(msg.find("unconverged") != std::string::npos);
  }
}

TEST_CASE("density snapshot picks the nearest sample and flags small entries") {
  Trajectory traj;
  traj.meta.n_sites = 2;
  traj.times = {0.0, 10.0, 20.0};
  Eigen::MatrixXcd mid(2, 2);
  mid << std::complex<double>(0.9, 0.0), std::complex<double>(0.001, 0.003),
      std::complex<double>(0.001, -0.003), std::complex<double>(0.1, 0.0);
  traj.states = {site_state(2, 0), mid, site_state(2, 1)};

  const DensitySnapshot on = density_snapshot(traj, 10.0, 0.005);
  CHECK(!on.off_grid);
  CHECK(on.t_actual == 10.0);
  CHECK(on.magnitude(0, 1) == doctest::Approx(std::abs(mid(0, 1))).epsilon(1e-14));
  CHECK(on.exact(1, 0) == mid(1, 0));
  CHECK(on.flagged(0, 1));
  CHECK(!on.flagged(0, 0));

  const DensitySnapshot off = density_snapshot(traj, 12.0, 0.005);
  CHECK(off.off_grid);
  CHECK(off.t_actual == 10.0);
  CHECK(off.t_requested == 12.0);

  CHECK_THROWS_AS(density_snapshot(Trajectory{}, 0.0), UsageError);
}
