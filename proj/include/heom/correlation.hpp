#pragma once

#include <complex>
#include <vector>

#include "heom/model.hpp"

namespace heom {

// Controls the reference quadrature for the bath correlation function.
struct QuadratureConfig {
  double rel_tol = 1e-8;
  // Upper cutoff for the exponentially decaying thermal component,
  // in units of max(gamma, 1/beta).
  double cutoff_factor = 50.0;
  std::size_t workspace_size = 4000;
};

// Bath correlation function in cm^-2,
//   C(tau) = (1/pi) Int_0^inf J(w) [coth(beta w/2) cos(w tau) - i sin(w tau)] dw,
// evaluated by adaptive quadrature. Serves as the oracle against which the
// Matsubara expansion is validated. tau in fs, tau >= 0.
std::complex<double> bath_correlation(double tau, const BathSpec& bath,
                                      const QuadratureConfig& config = {});

// Exponential decomposition C(tau) ~= sum_k c_k exp(-nu_k tau):
//   c_0 = lambda*gamma*(cot(beta*gamma/2) - i),        nu_0 = gamma,
//   c_k = (4*lambda*gamma/beta) * nu_k/(nu_k^2 - gamma^2), nu_k = 2*pi*k/beta.
// terminator_rate is the truncated tail sum_{k>K} c_k/nu_k (real, cm^-1),
// applied by the hierarchy as an instantaneous Markovian correction.
struct MatsubaraExpansion {
  std::vector<std::complex<double>> coefficients;  // c_k, cm^-2, k = 0..K
  std::vector<double> rates;                       // nu_k, cm^-1, strictly increasing
  double terminator_rate = 0.0;                    // cm^-1

  int n_terms() const { return static_cast<int>(rates.size()); }  // K + 1
  // sum_k c_k exp(-nu_k tau) with tau in fs.
  std::complex<double> reconstruct(double tau) const;
};

// Throws DegenerateParametersError when some nu_k coincides with gamma
// (beta*gamma = 2*pi*k); perturb the temperature slightly to lift it.
MatsubaraExpansion matsubara_expansion(const BathSpec& bath);

}  // namespace heom
