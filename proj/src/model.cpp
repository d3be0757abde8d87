#include "heom/model.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "heom/errors.hpp"

namespace heom {

void validate_bath(const BathSpec& bath) {
  if (!(bath.lambda >= 0.0) || !std::isfinite(bath.lambda))
    throw UsageError("reorganization energy must be >= 0, got " + std::to_string(bath.lambda));
  if (!(bath.gamma > 0.0) || !std::isfinite(bath.gamma))
    throw UsageError("cut-off frequency must be > 0, got " + std::to_string(bath.gamma));
  if (!(bath.temperature > 0.0) || !std::isfinite(bath.temperature))
    throw UsageError("temperature must be > 0, got " + std::to_string(bath.temperature));
  if (bath.n_matsubara < 0)
    throw UsageError("Matsubara count must be >= 0, got " + std::to_string(bath.n_matsubara));
}

ExcitonHamiltonian fmo_hamiltonian() {
  ExcitonHamiltonian h;
  h.n_sites = 8;
  h.diagonal_offset = 12195.0;
  h.matrix.resize(8, 8);
  h.matrix << 310.0, -80.3, 3.5, -4.0, 4.5, -10.2, -4.9, 21.0,
      -80.3, 230.0, 23.5, 6.7, 0.5, 7.5, 1.5, 3.3,
      3.5, 23.5, 0.0, -49.8, -1.5, -6.5, 1.2, 0.7,
      -4.0, 6.7, -49.8, 180.0, 63.4, -13.3, -42.2, -1.2,
      4.5, 0.5, -1.5, 63.4, 450.0, 55.8, 4.7, 2.8,
      -10.2, 7.5, -6.5, -13.3, 55.8, 320.0, 33.0, -7.3,
      -4.9, 1.5, 1.2, -42.2, 4.7, 33.0, 270.0, -8.7,
      21.0, 3.3, 0.7, -1.2, 2.8, -7.3, -8.7, 505.0;
  return h;
}

ExcitonHamiltonian load_hamiltonian(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open Hamiltonian file: " + path);

  std::string line;
  long line_no = 0;
  auto next_line = [&]() {
    while (std::getline(in, line)) {
      ++line_no;
      auto pos = line.find_first_not_of(" \t\r");
      if (pos == std::string::npos || line[pos] == '#') continue;
      return true;
    }
    return false;
  };

  if (!next_line()) throw ParseError(path, line_no, "empty Hamiltonian file");
  ExcitonHamiltonian h;
  {
    std::istringstream ss(line);
    if (!(ss >> h.n_sites >> h.diagonal_offset))
      throw ParseError(path, line_no, "expected \"N offset\" on the first line");
    if (h.n_sites < 2)
      throw ParseError(path, line_no, "need at least 2 sites, got " + std::to_string(h.n_sites));
    if (h.n_sites > 64)
      throw ParseError(path, line_no, "site count " + std::to_string(h.n_sites) + " exceeds the supported maximum of 64");
  }

  h.matrix.resize(h.n_sites, h.n_sites);
  for (int i = 0; i < h.n_sites; ++i) {
    if (!next_line())
      throw ParseError(path, line_no, "matrix row " + std::to_string(i + 1) + " missing");
    std::istringstream ss(line);
    for (int j = 0; j < h.n_sites; ++j) {
      if (!(ss >> h.matrix(i, j)))
        throw ParseError(path, line_no, "matrix row " + std::to_string(i + 1) +
                                            " needs " + std::to_string(h.n_sites) + " entries");
    }
    double extra;
    if (ss >> extra)
      throw ParseError(path, line_no, "matrix row " + std::to_string(i + 1) + " has extra entries");
  }

  for (int i = 0; i < h.n_sites; ++i)
    for (int j = i + 1; j < h.n_sites; ++j)
      if (h.matrix(i, j) != h.matrix(j, i))
        throw ParseError(path, line_no,
                         "matrix is not symmetric at (" + std::to_string(i + 1) + "," +
                             std::to_string(j + 1) + ")");
  return h;
}

ExcitonHamiltonian resolve_model(const std::string& name_or_path) {
  if (name_or_path == "fmo8") return fmo_hamiltonian();
  return load_hamiltonian(name_or_path);
}

std::string hamiltonian_checksum(const ExcitonHamiltonian& h) {
  std::string canonical;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%d %.17g", h.n_sites, h.diagonal_offset);
  canonical = buf;
  for (int i = 0; i < h.n_sites; ++i)
    for (int j = 0; j < h.n_sites; ++j) {
      std::snprintf(buf, sizeof buf, " %.17g", h.matrix(i, j));
      canonical += buf;
    }

  std::uint64_t hash = 0xcbf29ce484222325ull;
  for (unsigned char c : canonical) {
    hash ^= c;
    hash *= 0x100000001b3ull;
  }
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash));
  return buf;
}

double spectral_density(double omega, const BathSpec& bath) {
  if (!(omega >= 0.0)) throw UsageError("spectral density defined for omega >= 0");
  return 2.0 * bath.lambda * bath.gamma * omega / (bath.gamma * bath.gamma + omega * omega);
}

double average_energy_gap(const ExcitonHamiltonian& h) {
  const int n = h.n_sites;
  Eigen::MatrixXd traceless = h.matrix;
  traceless.diagonal().array() -= h.matrix.trace() / n;
  // Nuclear norm of a symmetric matrix: sum of |eigenvalues|.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(traceless, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().cwiseAbs().sum() / (n - 1);
}

double efficiency_parameter(const BathSpec& bath, double g) {
  if (!(g > 0.0)) throw UsageError("efficiency parameter needs g > 0");
  return bath.lambda / (bath.beta() * bath.gamma * g);
}

EfficiencyDiagnostics efficiency_diagnostics(const BathSpec& bath, double g) {
  EfficiencyDiagnostics d;
  d.Lambda = efficiency_parameter(bath, g);
  d.ln_Lambda = std::log(d.Lambda);
  d.ln_gamma_over_lambda = std::log(bath.gamma / bath.lambda);
  d.ln_gamma_beta = std::log(bath.gamma * bath.beta());
  return d;
}

}  // namespace heom
