#include "heom/sweep.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "heom/errors.hpp"
#include "heom/model.hpp"
#include "heom/units.hpp"

namespace heom {

namespace {

constexpr const char* kManifestVersion = "heom manifest v1";
constexpr const char* kAggregateVersion = "heom sweep-aggregate v1";

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Short form for identifiers and column labels: 310 not 3.1e+02.
std::string fmt_short(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

std::vector<double> arithmetic_grid(double first, double step, int count) {
  std::vector<double> grid(count);
  for (int i = 0; i < count; ++i) grid[i] = first + step * i;
  return grid;
}

}  // namespace

std::vector<double> default_lambda_grid() { return arithmetic_grid(10.0, 30.0, 18); }
std::vector<double> default_gamma_grid() { return arithmetic_grid(25.0, 25.0, 20); }
std::vector<double> default_temperature_grid() { return arithmetic_grid(30.0, 20.0, 25); }

std::string run_identifier(double lambda, double gamma, double temperature) {
  std::ostringstream ss;
  ss << "lam" << fmt_short(lambda) << "_gam" << fmt_short(gamma) << "_T"
     << fmt_short(temperature);
  return ss.str();
}

SweepManifest sweep_manifest(const std::vector<double>& lambda_grid,
                             const std::vector<double>& gamma_grid,
                             const std::vector<double>& temperature_grid,
                             const std::vector<std::array<double, 3>>* subset,
                             int initial_site) {
  SweepManifest manifest;
  manifest.lambda_grid = lambda_grid;
  manifest.gamma_grid = gamma_grid;
  manifest.temperature_grid = temperature_grid;
  manifest.initial_site = initial_site;

  std::vector<std::array<double, 3>> triples;
  if (subset) {
    triples = *subset;
  } else {
    triples.reserve(lambda_grid.size() * gamma_grid.size() * temperature_grid.size());
    for (double lam : lambda_grid)
      for (double gam : gamma_grid)
        for (double temp : temperature_grid) triples.push_back({lam, gam, temp});
  }

  std::set<std::string> seen;
  manifest.runs.reserve(triples.size());
  for (const auto& t : triples) {
    BathSpec bath{t[0], t[1], t[2], 0};
    validate_bath(bath);
    SweepPoint point{run_identifier(t[0], t[1], t[2]), t[0], t[1], t[2]};
    if (!seen.insert(point.run_id).second)
      throw ManifestError("duplicate run " + point.run_id);
    manifest.runs.push_back(std::move(point));
  }
  if (manifest.runs.empty()) throw ManifestError("manifest has no runs");
  return manifest;
}

void write_manifest(const SweepManifest& manifest, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw UsageError("cannot open for writing: " + path);
  auto grid_line = [&](const char* name, const std::vector<double>& grid) {
    out << "# " << name;
    for (double v : grid) out << ' ' << fmt_short(v);
    out << "\n";
  };
  out << "# " << kManifestVersion << "\n";
  grid_line("lambda_grid", manifest.lambda_grid);
  grid_line("gamma_grid", manifest.gamma_grid);
  grid_line("temperature_grid", manifest.temperature_grid);
  out << "# initial_site " << manifest.initial_site + 1 << "\n";
  out << "# runs " << manifest.runs.size() << "\n";
  out << "# columns run_id lambda gamma temperature\n";
  for (const auto& r : manifest.runs)
    out << r.run_id << ' ' << fmt(r.lambda) << ' ' << fmt(r.gamma) << ' ' << fmt(r.temperature)
        << "\n";
  if (!out) throw UsageError("write failed: " + path);
}

SweepManifest read_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open manifest: " + path);

  SweepManifest manifest;
  std::string line;
  long line_no = 0;
  bool version_seen = false;
  long declared_runs = -1;
  std::set<std::string> seen;

  auto parse_grid = [&](std::istringstream& ss, std::vector<double>& grid) {
    double v;
    while (ss >> v) grid.push_back(v);
  };

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.find_first_not_of(" \t") == std::string::npos) continue;
    if (line[0] == '#') {
      std::string rest = line.substr(1);
      const auto start = rest.find_first_not_of(' ');
      rest = start == std::string::npos ? "" : rest.substr(start);
      if (!version_seen) {
        if (rest != kManifestVersion)
          throw ParseError(path, line_no, "unsupported format: expected \"# " +
                                              std::string(kManifestVersion) + "\"");
        version_seen = true;
        continue;
      }
      std::istringstream ss(rest);
      std::string key;
      ss >> key;
      if (key == "lambda_grid")
        parse_grid(ss, manifest.lambda_grid);
      else if (key == "gamma_grid")
        parse_grid(ss, manifest.gamma_grid);
      else if (key == "temperature_grid")
        parse_grid(ss, manifest.temperature_grid);
      else if (key == "initial_site") {
        int site = 0;
        if (!(ss >> site) || site < 1)
          throw ParseError(path, line_no, "initial_site must be a positive site label");
        manifest.initial_site = site - 1;
      } else if (key == "runs") {
        if (!(ss >> declared_runs)) throw ParseError(path, line_no, "runs must be an integer");
      }
      continue;
    }
    if (!version_seen) throw ParseError(path, line_no, "missing format version header");
    std::istringstream ss(line);
    SweepPoint point;
    if (!(ss >> point.run_id >> point.lambda >> point.gamma >> point.temperature))
      throw ParseError(path, line_no, "expected \"run_id lambda gamma temperature\"");
    if (!seen.insert(point.run_id).second)
      throw ParseError(path, line_no, "duplicate run " + point.run_id);
    manifest.runs.push_back(std::move(point));
  }
  if (!version_seen) throw ParseError(path, line_no, "missing format version header");
  if (manifest.runs.empty()) throw ParseError(path, line_no, "manifest has no runs");
  if (declared_runs >= 0 && declared_runs != static_cast<long>(manifest.runs.size()))
    throw ParseError(path, line_no,
                     "manifest declares " + std::to_string(declared_runs) + " runs but lists " +
                         std::to_string(manifest.runs.size()));
  return manifest;
}

std::vector<double> default_aggregate_times() { return {100.0, 500.0, 1000.0, 2000.0}; }

AggregateRow make_aggregate_row(const SweepPoint& point, double g, const MeasureSeries& series,
                                const std::vector<double>& sample_times) {
  if (series.times.empty()) throw UsageError("measure series is empty");
  BathSpec bath{point.lambda, point.gamma, point.temperature, 0};
  const EfficiencyDiagnostics diag = efficiency_diagnostics(bath, g);

  AggregateRow row;
  row.run_id = point.run_id;
  row.lambda = point.lambda;
  row.gamma = point.gamma;
  row.temperature = point.temperature;
  row.ln_gamma_over_lambda = diag.ln_gamma_over_lambda;
  row.ln_gamma_beta = diag.ln_gamma_beta;
  row.ln_Lambda = diag.ln_Lambda;

  for (double t : sample_times) {
    std::size_t best = 0;
    double best_dist = std::abs(series.times[0] - t);
    for (std::size_t i = 1; i < series.times.size(); ++i) {
      const double d = std::abs(series.times[i] - t);
      if (d < best_dist) {
        best = i;
        best_dist = d;
      }
    }
    row.entanglement.push_back(series.global_entanglement[best]);
    row.coherence_length.push_back(series.coherence_length[best]);
  }
  return row;
}

void write_aggregate(const std::vector<AggregateRow>& rows,
                     const std::vector<double>& sample_times, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw UsageError("cannot open for writing: " + path);
  out << "# " << kAggregateVersion << "\n";
  out << "# sample_times_fs";
  for (double t : sample_times) out << ' ' << fmt_short(t);
  out << "\n";
  out << "# rows " << rows.size() << "\n";
  out << "# columns run_id lambda gamma temperature ln_gamma_over_lambda ln_gamma_beta ln_Lambda";
  for (double t : sample_times) out << " E_" << fmt_short(t) << "fs";
  for (double t : sample_times) out << " L_" << fmt_short(t) << "fs";
  out << "\n";
  for (const auto& r : rows) {
    out << r.run_id << ' ' << fmt(r.lambda) << ' ' << fmt(r.gamma) << ' ' << fmt(r.temperature)
        << ' ' << fmt(r.ln_gamma_over_lambda) << ' ' << fmt(r.ln_gamma_beta) << ' '
        << fmt(r.ln_Lambda);
    for (double v : r.entanglement) out << ' ' << fmt(v);
    for (double v : r.coherence_length) out << ' ' << fmt(v);
    out << "\n";
  }
  if (!out) throw UsageError("write failed: " + path);
}

}  // namespace heom
