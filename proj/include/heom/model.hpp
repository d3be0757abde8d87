#pragma once

#include <Eigen/Dense>
#include <string>

#include "heom/units.hpp"

namespace heom {

// N-site excitonic Hamiltonian: real symmetric matrix in cm^-1 with site
// energies on the diagonal and electronic couplings off it. The uniform
// diagonal offset is recorded separately and never enters the dynamics.
struct ExcitonHamiltonian {
  int n_sites = 0;
  Eigen::MatrixXd matrix;        // n_sites x n_sites, exactly symmetric, cm^-1
  double diagonal_offset = 0.0;  // cm^-1
};

// Identical Drude-Lorentz bath attached independently to every site, coupling
// through the site projector |n><n|.
struct BathSpec {
  double lambda = 0.0;       // reorganization energy, cm^-1, >= 0
  double gamma = 0.0;        // cut-off frequency, cm^-1, > 0
  double temperature = 0.0;  // K, > 0
  int n_matsubara = 0;       // Matsubara terms beyond the Drude pole, >= 0

  double beta() const { return units.beta(temperature); }  // (cm^-1)^-1
};

// Throws UsageError unless lambda >= 0, gamma > 0, temperature > 0, K >= 0.
void validate_bath(const BathSpec& bath);

// Built-in 8-site FMO Hamiltonian (diagonal offset 12195 cm^-1).
ExcitonHamiltonian fmo_hamiltonian();

// Plain-text Hamiltonian file: first line "N offset", then N rows of N
// whitespace-separated reals in cm^-1. The matrix must be exactly symmetric.
ExcitonHamiltonian load_hamiltonian(const std::string& path);

// Accepts the built-in model name "fmo8" or a Hamiltonian file path.
ExcitonHamiltonian resolve_model(const std::string& name_or_path);

// FNV-1a 64-bit fingerprint of the canonical text rendering of (N, offset,
// matrix). Lets downstream consumers detect a Hamiltonian mismatch.
std::string hamiltonian_checksum(const ExcitonHamiltonian& h);

// Drude-Lorentz spectral density J(omega) = 2*lambda*gamma*omega/(gamma^2 + omega^2),
// cm^-1; peaks at omega = gamma with value lambda.
double spectral_density(double omega, const BathSpec& bath);

// Nuclear-norm average energy gap g = ||H - Tr(H) I/N||_* / (N - 1), cm^-1.
// Invariant under adding any multiple of the identity.
double average_energy_gap(const ExcitonHamiltonian& h);

// Efficiency parameter Lambda = lambda/(beta*gamma*g), dimensionless;
// transfer is near-optimal when Lambda is close to 1.
double efficiency_parameter(const BathSpec& bath, double g);

// Log-scale diagnostics reported alongside Lambda.
struct EfficiencyDiagnostics {
  double Lambda = 0.0;
  double ln_Lambda = 0.0;
  double ln_gamma_over_lambda = 0.0;
  double ln_gamma_beta = 0.0;
};

EfficiencyDiagnostics efficiency_diagnostics(const BathSpec& bath, double g);

}  // namespace heom
