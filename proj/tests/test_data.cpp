#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "heom/errors.hpp"
#include "heom/hierarchy.hpp"
#include "heom/measures.hpp"
#include "heom/model.hpp"
#include "heom/propagate.hpp"
#include "heom/sweep.hpp"
#include "heom/trajectory_io.hpp"

using namespace heom;

namespace {

std::filesystem::path scratch_dir() {
  const auto dir = std::filesystem::temp_directory_path() / "heom_test_data";
  std::filesystem::create_directories(dir);
  return dir;
}

std::string scratch_file(const std::string& name) { return (scratch_dir() / name).string(); }

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(bool(in));
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void spit(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  REQUIRE(bool(out));
  out << content;
}

Trajectory dimer_trajectory() {
  ExcitonHamiltonian h;
  h.n_sites = 2;
  h.matrix.resize(2, 2);
  h.matrix << 120.0, 50.0, 50.0, 40.0;
  const BathSpec bath{30.0, 80.0, 200.0, 1};
  const Hierarchy hier(h, bath, 2);
  PropagationConfig pc;
  pc.dt = 0.5;
  pc.t_max = 40.0;
  pc.output_stride = 2.0;
  pc.level = 2;
  return propagate(site_state(2, 0), hier, pc);
}

std::string drop_line_containing(const std::string& text, const std::string& needle) {
  std::istringstream in(text);
  std::ostringstream out;
  std::string line;
  while (std::getline(in, line))
    if (line.find(needle) == std::string::npos) out << line << "\n";
  return out.str();
}

}  // namespace

TEST_CASE("trajectory files survive a write/read/write round trip bit for bit") {
  const Trajectory traj = dimer_trajectory();
  const std::string first = scratch_file("roundtrip_a.txt");
  const std::string second = scratch_file("roundtrip_b.txt");
  write_trajectory(traj, first);

  const Trajectory back = read_trajectory(first);
  REQUIRE(back.times.size() == traj.times.size());
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    CHECK(back.times[i] == traj.times[i]);
    CHECK((back.states[i].array() == traj.states[i].array()).all());
  }
  CHECK(back.meta.n_sites == traj.meta.n_sites);
  CHECK(back.meta.lambda == traj.meta.lambda);
  CHECK(back.meta.gamma == traj.meta.gamma);
  CHECK(back.meta.temperature == traj.meta.temperature);
  CHECK(back.meta.n_matsubara == traj.meta.n_matsubara);
  CHECK(back.meta.level == traj.meta.level);
  CHECK(back.meta.dt == traj.meta.dt);
  CHECK(back.meta.output_stride == traj.meta.output_stride);
  CHECK(back.meta.initial_site == 0);
  CHECK(back.meta.diagonal_offset == traj.meta.diagonal_offset);
  CHECK(back.meta.hamiltonian_checksum == traj.meta.hamiltonian_checksum);
  CHECK(back.meta.external == false);
  CHECK(back.meta.max_negative_population == traj.meta.max_negative_population);

  write_trajectory(back, second);
  CHECK(slurp(first) == slurp(second));
}

TEST_CASE("trajectory reader rejects damaged files") {
  const Trajectory traj = dimer_trajectory();
  const std::string path = scratch_file("damaged.txt");
  write_trajectory(traj, path);
  const std::string good = slurp(path);

  SUBCASE("unknown format version") {
    std::string bad = good;
    bad.replace(bad.find("trajectory v1"), 13, "trajectory v9");
    spit(path, bad);
    CHECK_THROWS_AS(read_trajectory(path), ParseError);
  }
  SUBCASE("missing trailing rows") {
    spit(path, good.substr(0, good.rfind("\n", good.size() - 2) + 1));
    CHECK_THROWS_AS(read_trajectory(path), ParseError);
  }
  SUBCASE("missing site count") {
    spit(path, drop_line_containing(good, "# n_sites"));
    CHECK_THROWS_AS(read_trajectory(path), ParseError);
  }
  SUBCASE("absent bath parameters are read back as unknown") {
    spit(path, drop_line_containing(good, "# lambda"));
    CHECK(std::isnan(read_trajectory(path).meta.lambda));
  }
  SUBCASE("short row") {
    std::string bad = good;
    bad.resize(bad.rfind(' '));
    bad += "\n";
    spit(path, bad);
    CHECK_THROWS_AS(read_trajectory(path), ParseError);
  }
  SUBCASE("non-numeric value") {
    std::string bad = good;
    bad.replace(bad.rfind("0."), 2, "q.");
    spit(path, bad);
    CHECK_THROWS_AS(read_trajectory(path), ParseError);
  }
  CHECK_THROWS_AS(read_trajectory(scratch_file("no_such_file.txt")), UsageError);
}

TEST_CASE("measure files carry the pair labels and exact values") {
  const Trajectory traj = dimer_trajectory();
  const MeasureSeries series = trajectory_measures(traj, {{0, 1}});
  const std::string path = scratch_file("measures.txt");
  write_measures(series, path);
  const std::string text = slurp(path);

  CHECK(text.find("heom measures v1") != std::string::npos);
  CHECK(text.find("# pairs 1-2") != std::string::npos);
  CHECK(text.find("# columns t_fs E S L_rho C_1_2") != std::string::npos);

  std::istringstream in(text);
  std::string line;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    double t, e, s, l, c;
    REQUIRE((ss >> t >> e >> s >> l >> c));
    CHECK(t == series.times[rows]);
    CHECK(e == series.global_entanglement[rows]);
    CHECK(s == series.entropy[rows]);
    CHECK(l == series.coherence_length[rows]);
    CHECK(c == series.concurrences[0][rows]);
    ++rows;
  }
  CHECK(rows == series.times.size());
}

TEST_CASE("snapshot writer emits magnitudes, flags, and exact parts") {
  Trajectory traj;
  traj.meta.n_sites = 2;
  traj.times = {0.0, 10.0};
  Eigen::MatrixXcd rho(2, 2);
  rho << std::complex<double>(0.75, 0.0), std::complex<double>(0.002, 0.001),
      std::complex<double>(0.002, -0.001), std::complex<double>(0.25, 0.0);
  traj.states = {site_state(2, 0), rho};

  std::ostringstream out;
  write_snapshot(density_snapshot(traj, 12.0, 0.005), out);
  const std::string text = out.str();
  CHECK(text.find("heom snapshot v1") != std::string::npos);
  CHECK(text.find("t_requested 12") != std::string::npos);
  CHECK(text.find("t_actual 10") != std::string::npos);
  CHECK(text.find("off_grid 1") != std::string::npos);
  CHECK(text.find("warning: requested time not on the output grid") != std::string::npos);
  CHECK(text.find("threshold 0.005") != std::string::npos);
  CHECK(text.find("0.75") != std::string::npos);
  // |rho_12| = sqrt(0.002^2 + 0.001^2) sits below the threshold
  CHECK(text.find("0.0022360679") != std::string::npos);
}

TEST_CASE("external layout parsing enforces single full coverage") {
  const ExternalLayout id = identity_layout(2);
  CHECK(id.n_sites == 2);
  REQUIRE(id.tokens.size() == 5);
  CHECK(id.tokens[0] == "t");

  CHECK_NOTHROW(parse_layout("t pop_1 pop_2 re_1_2 im_1_2", 2));
  CHECK_NOTHROW(parse_layout("im_2_1 skip t pop_2 pop_1 re_2_1", 2));

  CHECK_THROWS_AS(parse_layout("t pop_1 pop_1 re_1_2 im_1_2", 2), ImportError);
  CHECK_THROWS_AS(parse_layout("t pop_1 pop_2 re_1_2 skip", 2), ImportError);
  CHECK_THROWS_AS(parse_layout("t t pop_1 pop_2 re_1_2 im_1_2", 2), ImportError);
  CHECK_THROWS_AS(parse_layout("pop_1 pop_2 re_1_2 im_1_2", 2), ImportError);
  CHECK_THROWS_AS(parse_layout("t pop_1 pop_2 re_1_2 im_1_2 flux", 2), ImportError);
  CHECK_THROWS_AS(parse_layout("t pop_1 pop_2 re_1_3 im_1_3", 2), ImportError);
  CHECK_THROWS_AS(parse_layout("t pop_1 pop_2 re_1_1 im_1_1", 2), ImportError);
}

TEST_CASE("external import honors permuted layouts and skip columns") {
  const std::string path = scratch_file("external.txt");
  spit(path,
       "# published populations and the 1-2 coherence\n"
       "0   9.9 0.0  0.0 1.0 0.0\n"
       "25  9.9 0.1 -0.2 0.6 0.4\n"
       "50  9.9 0.0  0.0 0.5 0.5\n");
  const ExternalLayout layout = parse_layout("t skip re_2_1 im_2_1 pop_1 pop_2", 2);

  const Trajectory traj = import_external(path, layout);
  REQUIRE(traj.times.size() == 3);
  CHECK(traj.times[1] == 25.0);
  CHECK(traj.meta.external);
  CHECK(traj.meta.n_sites == 2);
  CHECK(traj.meta.output_stride == 25.0);
  CHECK(traj.states[1](0, 0) == std::complex<double>(0.6, 0.0));
  CHECK(traj.states[1](1, 1) == std::complex<double>(0.4, 0.0));
  // re_2_1/im_2_1 describe rho_21; the import mirrors it to rho_12
  CHECK(traj.states[1](1, 0) == std::complex<double>(0.1, -0.2));
  CHECK(traj.states[1](0, 1) == std::complex<double>(0.1, 0.2));

  const MeasureSeries series = trajectory_measures(traj, {{0, 1}});
  CHECK(series.concurrences[0][1] == doctest::Approx(2.0 * std::hypot(0.1, 0.2)).epsilon(1e-14));
}

TEST_CASE("external import rejects unphysical rows by line") {
  const ExternalLayout layout = identity_layout(2);
  const std::string path = scratch_file("external_bad.txt");

  SUBCASE("trace away from one") {
    spit(path, "0 1.0 0.0 0 0\n10 0.7 0.4 0 0\n");
    try {
      import_external(path, layout);
      FAIL("expected an import error");
    } catch (const ImportError& e) {
      CHECK(std::string(e.what()).find(":2") != std::string::npos);
    }
  }
  SUBCASE("negative population") {
    spit(path, "0 1.01 -0.01 0 0\n");
    CHECK_THROWS_AS(import_external(path, layout), ImportError);
  }
  SUBCASE("trace drift within tolerance is accepted") {
    spit(path, "0 1.0000004 0.0000001 0 0\n10 0.5 0.5 0 0\n");
    CHECK_NOTHROW(import_external(path, layout));
  }
  SUBCASE("short row") {
    spit(path, "0 1.0 0.0 0\n");
    CHECK_THROWS_AS(import_external(path, layout), ImportError);
  }
  SUBCASE("non-numeric cell") {
    spit(path, "0 one 0.0 0 0\n");
    CHECK_THROWS_AS(import_external(path, layout), ImportError);
  }
}

TEST_CASE("run identifiers are stable and compact") {
  CHECK(run_identifier(40, 25, 310) == "lam40_gam25_T310");
  CHECK(run_identifier(12.5, 100, 77.5) == "lam12.5_gam100_T77.5");
}

TEST_CASE("default sweep grids match the published resolution") {
  const auto lam = default_lambda_grid();
  const auto gam = default_gamma_grid();
  const auto tem = default_temperature_grid();
  CHECK(lam.size() == 18);
  CHECK(gam.size() == 20);
  CHECK(tem.size() == 25);
  CHECK(lam.front() == 10.0);
  CHECK(lam.back() == 520.0);
  CHECK(gam.front() == 25.0);
  CHECK(gam.back() == 500.0);
  CHECK(tem.front() == 30.0);
  CHECK(tem.back() == 510.0);
  CHECK(sweep_manifest(lam, gam, tem).runs.size() == 18u * 20u * 25u);
}

TEST_CASE("manifest product order runs temperature fastest") {
  const SweepManifest m = sweep_manifest({10, 40}, {25}, {100, 200});
  REQUIRE(m.runs.size() == 4);
  CHECK(m.runs[0].run_id == "lam10_gam25_T100");
  CHECK(m.runs[1].run_id == "lam10_gam25_T200");
  CHECK(m.runs[2].run_id == "lam40_gam25_T100");
  CHECK(m.runs[3].run_id == "lam40_gam25_T200");

  CHECK_THROWS_AS(sweep_manifest({}, {25}, {100}), ManifestError);
  CHECK_THROWS_AS(sweep_manifest({10, 10}, {25}, {100}), ManifestError);

  const std::vector<std::array<double, 3>> subset = {{40, 25, 310}, {40, 25, 310}};
  CHECK_THROWS_AS(sweep_manifest({}, {}, {}, &subset), ManifestError);
  CHECK_THROWS_AS(sweep_manifest({10}, {25}, {-5}), UsageError);
}

TEST_CASE("manifest files round trip") {
  const std::vector<std::array<double, 3>> subset = {{40, 25, 310}, {10, 500, 70}};
  const SweepManifest m = sweep_manifest({}, {}, {}, &subset, 5);
  const std::string path = scratch_file("manifest.txt");
  write_manifest(m, path);

  const SweepManifest back = read_manifest(path);
  CHECK(back.initial_site == 5);
  REQUIRE(back.runs.size() == 2);
  CHECK(back.runs[0].run_id == m.runs[0].run_id);
  CHECK(back.runs[1].lambda == 10.0);
  CHECK(back.runs[1].gamma == 500.0);
  CHECK(back.runs[1].temperature == 70.0);

  const std::string good = slurp(path);
  SUBCASE("version line is mandatory") {
    spit(path, drop_line_containing(good, "manifest v1"));
    CHECK_THROWS_AS(read_manifest(path), ParseError);
  }
  SUBCASE("declared run count must match") {
    spit(path, good + "extra 1 2 3\n");
    CHECK_THROWS_AS(read_manifest(path), ParseError);
  }
  SUBCASE("duplicate run ids are rejected") {
    spit(path, drop_line_containing(good, "lam10_gam500_T70") + "lam40_gam25_T310 40 25 310\n");
    CHECK_THROWS_AS(read_manifest(path), ParseError);
  }
}

TEST_CASE("aggregate rows pick the nearest sample and log the bath diagnostics") {
  MeasureSeries series;
  series.times = {0.0, 480.0, 600.0};
  series.global_entanglement = {0.0, 1.1, 1.3};
  series.entropy = {0.0, 0.9, 1.0};
  series.coherence_length = {0.125, 2.5, 2.0};

  SweepPoint point{"lam40_gam25_T310", 40.0, 25.0, 310.0};
  const AggregateRow row = make_aggregate_row(point, 157.17838334324941, series, {500.0});
  REQUIRE(row.entanglement.size() == 1);
  CHECK(row.entanglement[0] == 1.1);
  CHECK(row.coherence_length[0] == 2.5);
  CHECK(row.ln_gamma_over_lambda == doctest::Approx(std::log(25.0 / 40.0)).epsilon(1e-14));

  const std::string path = scratch_file("aggregate.txt");
  write_aggregate({row}, {500.0}, path);
  const std::string text = slurp(path);
  CHECK(text.find("heom sweep-aggregate v1") != std::string::npos);
  CHECK(text.find("# sample_times_fs 500") != std::string::npos);
  CHECK(text.find("E_500fs L_500fs") != std::string::npos);
  CHECK(text.find("lam40_gam25_T310 40 25 310") != std::string::npos);

  CHECK_THROWS_AS(make_aggregate_row(point, 157.0, MeasureSeries{}, {500.0}), UsageError);
}
