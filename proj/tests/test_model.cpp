#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <fstream>
#include <string>

#include "heom/errors.hpp"
#include "heom/model.hpp"
#include "heom/units.hpp"

using namespace heom;

namespace {

std::string write_temp(const std::string& name, const std::string& content) {
  const std::string path = std::string("/tmp/heom_test_") + name;
  std::ofstream out(path);
  out << content;
  return path;
}

}  // namespace

TEST_CASE("built-in eight-site model") {
  const ExcitonHamiltonian h = fmo_hamiltonian();
  CHECK(h.n_sites == 8);
  CHECK(h.diagonal_offset == doctest::Approx(12195.0));
  CHECK(h.matrix.rows() == 8);
  CHECK((h.matrix - h.matrix.transpose()).cwiseAbs().maxCoeff() == 0.0);
  CHECK(h.matrix(0, 1) == doctest::Approx(-80.3));
  CHECK(h.matrix(4, 4) == doctest::Approx(450.0));
  CHECK(h.matrix(7, 7) == doctest::Approx(505.0));
}

TEST_CASE("average energy gap of the built-in model") {
  const double g = average_energy_gap(fmo_hamiltonian());
  CHECK(g == doctest::Approx(157.17838334324941).epsilon(1e-12));
}

TEST_CASE("average energy gap ignores a uniform diagonal shift") {
  ExcitonHamiltonian h = fmo_hamiltonian();
  const double g = average_energy_gap(h);
  h.matrix.diagonal().array() += 12195.0;
  CHECK(average_energy_gap(h) == doctest::Approx(g).epsilon(1e-12));
}

TEST_CASE("average energy gap of a two-site system is the eigenvalue spread") {
  ExcitonHamiltonian h;
  h.n_sites = 2;
  h.matrix.resize(2, 2);
  h.matrix << 100.0, 50.0, 50.0, -100.0;
  // traceless already; eigenvalues +-sqrt(100^2 + 50^2), g = their |sum| / (N-1)
  CHECK(average_energy_gap(h) == doctest::Approx(2.0 * std::sqrt(12500.0)).epsilon(1e-14));
}

TEST_CASE("spectral density closed form") {
  const BathSpec bath{40.0, 25.0, 310.0, 0};
  CHECK(spectral_density(100.0, bath) == doctest::Approx(18.823529411764707).epsilon(1e-15));
  CHECK(spectral_density(0.0, bath) == 0.0);
  // peak at omega = gamma with value lambda
  CHECK(spectral_density(25.0, bath) == doctest::Approx(40.0).epsilon(1e-15));
}

TEST_CASE("efficiency parameter at the worked example point") {
  const BathSpec bath{40.0, 25.0, 310.0, 0};
  const double g = average_energy_gap(fmo_hamiltonian());
  CHECK(efficiency_parameter(bath, g) == doctest::Approx(2.19328672089441).epsilon(1e-12));

  const EfficiencyDiagnostics diag = efficiency_diagnostics(bath, g);
  CHECK(diag.Lambda == doctest::Approx(2.19328672089441).epsilon(1e-12));
  CHECK(diag.ln_Lambda == doctest::Approx(std::log(diag.Lambda)).epsilon(1e-14));
  CHECK(diag.ln_gamma_over_lambda == doctest::Approx(-0.47000362924573558).epsilon(1e-14));
  CHECK(diag.ln_gamma_beta == doctest::Approx(-2.1539031104580451).epsilon(1e-14));
}

TEST_CASE("bath validation") {
  CHECK_NOTHROW(validate_bath(BathSpec{0.0, 25.0, 310.0, 0}));
  CHECK_THROWS_AS(validate_bath(BathSpec{-1.0, 25.0, 310.0, 0}), UsageError);
  CHECK_THROWS_AS(validate_bath(BathSpec{40.0, 0.0, 310.0, 0}), UsageError);
  CHECK_THROWS_AS(validate_bath(BathSpec{40.0, 25.0, 0.0, 0}), UsageError);
  CHECK_THROWS_AS(validate_bath(BathSpec{40.0, 25.0, 310.0, -1}), UsageError);
}

TEST_CASE("inverse temperature follows from the Boltzmann constant") {
  const BathSpec bath{40.0, 25.0, 310.0, 0};
  CHECK(bath.beta() == doctest::Approx(1.0 / (0.6950348004 * 310.0)).epsilon(1e-15));
}

TEST_CASE("Hamiltonian file round trip") {
  const std::string path = write_temp("h_good.txt",
                                      "# two-site toy model\n"
                                      "2 100.0\n"
                                      "0.0 12.5\n"
                                      "12.5 50.0\n");
  const ExcitonHamiltonian h = load_hamiltonian(path);
  CHECK(h.n_sites == 2);
  CHECK(h.diagonal_offset == doctest::Approx(100.0));
  CHECK(h.matrix(0, 1) == doctest::Approx(12.5));
  CHECK(h.matrix(1, 1) == doctest::Approx(50.0));
  std::remove(path.c_str());
}

TEST_CASE("Hamiltonian file rejects asymmetry") {
  const std::string path = write_temp("h_asym.txt",
                                      "2 0\n"
                                      "0.0 12.5\n"
                                      "12.6 50.0\n");
  CHECK_THROWS_AS(load_hamiltonian(path), ParseError);
  std::remove(path.c_str());
}

TEST_CASE("Hamiltonian file rejects truncation and trailing entries") {
  const std::string truncated = write_temp("h_trunc.txt",
                                           "3 0\n"
                                           "0 1 2\n"
                                           "1 0 3\n");
  CHECK_THROWS_AS(load_hamiltonian(truncated), ParseError);
  std::remove(truncated.c_str());

  const std::string extra = write_temp("h_extra.txt",
                                       "2 0\n"
                                       "0.0 12.5\n"
                                       "12.5 50.0 99.0\n");
  CHECK_THROWS_AS(load_hamiltonian(extra), ParseError);
  std::remove(extra.c_str());
}

TEST_CASE("Hamiltonian parse errors carry the file location") {
  const std::string path = write_temp("h_badnum.txt",
                                      "2 0\n"
                                      "0.0 abc\n"
                                      "12.5 50.0\n");
  try {
    load_hamiltonian(path);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    const std::string msg = e.what();
    CHECK(msg.find(path) != std::string::npos);
    CHECK(msg.find(":2:") != std::string::npos);
  }
  std::remove(path.c_str());
}

TEST_CASE("model resolution by name and by path") {
  const ExcitonHamiltonian builtin = resolve_model("fmo8");
  CHECK(builtin.n_sites == 8);
  CHECK_THROWS(resolve_model("/nonexistent/h.txt"));
}

TEST_CASE("Hamiltonian checksum distinguishes models") {
  const std::string a = hamiltonian_checksum(fmo_hamiltonian());
  CHECK(a.size() == 16);
  ExcitonHamiltonian h = fmo_hamiltonian();
  h.matrix(0, 1) += 1e-9;
  h.matrix(1, 0) += 1e-9;
  CHECK(hamiltonian_checksum(h) != a);
  CHECK(hamiltonian_checksum(fmo_hamiltonian()) == a);
}
