#include "heom/correlation.hpp"

#include <gsl/gsl_errno.h>
#include <gsl/gsl_integration.h>

#include <cmath>
#include <memory>
#include <numbers>
#include <string>

#include "heom/errors.hpp"

namespace heom {

namespace {

constexpr double pi = std::numbers::pi;

struct IntegrandParams {
  double lambda, gamma, beta, tau;  // tau already in (cm^-1)^-1
};

double drude(double w, const IntegrandParams& p) {
  return 2.0 * p.lambda * p.gamma * w / (p.gamma * p.gamma + w * w);
}

// J(w) * (coth(beta w/2) - 1) * cos(w tau); decays like exp(-beta w).
double thermal_integrand(double w, void* params) {
  const auto& p = *static_cast<IntegrandParams*>(params);
  return drude(w, p) * (2.0 / std::expm1(p.beta * w)) * std::cos(w * p.tau);
}

// Bare J(w); the oscillatory cos/sin factor is supplied as a QAWF weight.
double bare_integrand(double w, void* params) {
  const auto& p = *static_cast<IntegrandParams*>(params);
  return drude(w, p);
}

struct WorkspaceDeleter {
  void operator()(gsl_integration_workspace* w) const { gsl_integration_workspace_free(w); }
};
struct TableDeleter {
  void operator()(gsl_integration_qawo_table* t) const { gsl_integration_qawo_table_free(t); }
};

using Workspace = std::unique_ptr<gsl_integration_workspace, WorkspaceDeleter>;
using QawoTable = std::unique_ptr<gsl_integration_qawo_table, TableDeleter>;

Workspace make_workspace(std::size_t n) {
  Workspace w(gsl_integration_workspace_alloc(n));
  if (!w) throw QuadratureError("failed to allocate quadrature workspace");
  return w;
}

void ensure_handler_off() {
  // The default GSL handler aborts the process; report through exceptions
  // instead. Safe to call repeatedly.
  static const auto once = [] {
    gsl_set_error_handler_off();
    return true;
  }();
  (void)once;
}

[[noreturn]] void quadrature_failure(const char* piece, int status, double err) {
  throw QuadratureError(std::string("bath correlation quadrature (") + piece +
                        ") did not converge: " + gsl_strerror(status) +
                        ", error estimate " + std::to_string(err));
}

// Semi-infinite Fourier integral Int_0^inf f(w) {sin,cos}(w tau) dw.
double fourier_integral(gsl_function* f, double tau, gsl_integration_qawo_enum weight,
                        double eps_abs, const QuadratureConfig& config, const char* piece) {
  auto main_ws = make_workspace(config.workspace_size);
  auto cycle_ws = make_workspace(config.workspace_size);
  QawoTable table(gsl_integration_qawo_table_alloc(tau, 1.0, weight, 64));
  if (!table) throw QuadratureError("failed to allocate Fourier quadrature table");

  double result = 0.0, abserr = 0.0;
  int status = gsl_integration_qawf(f, 0.0, eps_abs, config.workspace_size,
                                    main_ws.get(), cycle_ws.get(), table.get(),
                                    &result, &abserr);
  if (status != 0) quadrature_failure(piece, status, abserr);
  return result;
}

}  // namespace

std::complex<double> bath_correlation(double tau, const BathSpec& bath,
                                      const QuadratureConfig& config) {
  validate_bath(bath);
  if (!(tau >= 0.0)) throw UsageError("bath correlation defined for tau >= 0");
  if (bath.lambda == 0.0) return {0.0, 0.0};
  ensure_handler_off();

  IntegrandParams p{bath.lambda, bath.gamma, bath.beta(),
                    tau * units.cm1_to_rad_per_fs};

  // Magnitude scale of C: the classical 2*lambda/beta plus lambda*gamma.
  const double scale = bath.lambda * bath.gamma + 2.0 * bath.lambda / p.beta;
  const double eps_abs = config.rel_tol * scale;

  // Real part, split so each piece is integrable to machine accuracy:
  // J(w) coth(beta w/2) cos = J(w)(coth - 1) cos  +  J(w) cos.
  // The first decays exponentially and is handled by adaptive quadrature on
  // a finite interval; the second is a Fourier integral of a 1/w tail.
  gsl_function thermal{&thermal_integrand, &p};
  const double upper = config.cutoff_factor * std::max(bath.gamma, 1.0 / p.beta);
  auto ws = make_workspace(config.workspace_size);
  double re_thermal = 0.0, abserr = 0.0;
  int status = gsl_integration_qag(&thermal, 0.0, upper, eps_abs, config.rel_tol,
                                   config.workspace_size, GSL_INTEG_GAUSS61,
                                   ws.get(), &re_thermal, &abserr);
  if (status != 0) quadrature_failure("thermal part", status, abserr);

  gsl_function bare{&bare_integrand, &p};
  double re_bare, im;
  if (p.tau > 0.0) {
    re_bare = fourier_integral(&bare, p.tau, GSL_INTEG_COSINE, eps_abs, config,
                               "zero-point part");
    im = fourier_integral(&bare, p.tau, GSL_INTEG_SINE, eps_abs, config,
                          "imaginary part");
  } else {
    // At tau = 0 the zero-point integral of the 1/w tail diverges
    // logarithmically; the Drude correlation function has no finite C(0).
    throw QuadratureError(
        "bath correlation at tau = 0 is ultraviolet-divergent for the "
        "Drude-Lorentz bath; evaluate at tau > 0");
  }

  return {(re_thermal + re_bare) / pi, -im / pi};
}

MatsubaraExpansion matsubara_expansion(const BathSpec& bath) {
  validate_bath(bath);
  const double beta = bath.beta();
  const double gamma = bath.gamma;
  const double lambda = bath.lambda;
  const int K = bath.n_matsubara;

  // cot(beta gamma/2) has poles exactly where nu_k = gamma, caught below.
  for (int k = 1; k <= K; ++k) {
    const double nu = 2.0 * pi * k / beta;
    if (std::abs(nu - gamma) <= 1e-12 * gamma)
      throw DegenerateParametersError(
          "Matsubara frequency nu_" + std::to_string(k) +
          " coincides with gamma (beta*gamma = 2 pi k); perturb the "
          "temperature slightly to lift the degeneracy");
  }

  MatsubaraExpansion exp;
  exp.rates.reserve(K + 1);
  exp.coefficients.reserve(K + 1);

  exp.rates.push_back(gamma);
  const double cot = 1.0 / std::tan(0.5 * beta * gamma);
  exp.coefficients.emplace_back(lambda * gamma * cot, -lambda * gamma);

  double partial_tail = 0.0;  // sum_{k<=K} c_k/nu_k
  for (int k = 1; k <= K; ++k) {
    const double nu = 2.0 * pi * k / beta;
    const double ck_over_nu = (4.0 * lambda * gamma / beta) / (nu * nu - gamma * gamma);
    exp.rates.push_back(nu);
    exp.coefficients.emplace_back(ck_over_nu * nu, 0.0);
    partial_tail += ck_over_nu;
  }

  // Closed form of sum_{k>=1} c_k/nu_k minus the retained terms.
  exp.terminator_rate = 2.0 * lambda / (beta * gamma) - lambda * cot - partial_tail;
  return exp;
}

std::complex<double> MatsubaraExpansion::reconstruct(double tau) const {
  const double t = tau * units.cm1_to_rad_per_fs;
  std::complex<double> sum = 0.0;
  for (std::size_t k = 0; k < rates.size(); ++k)
    sum += coefficients[k] * std::exp(-rates[k] * t);
  return sum;
}

}  // namespace heom
