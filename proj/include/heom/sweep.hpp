#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "heom/measures.hpp"

namespace heom {

struct SweepPoint {
  std::string run_id;
  double lambda = 0.0;
  double gamma = 0.0;
  double temperature = 0.0;
};

struct SweepManifest {
  std::vector<double> lambda_grid;
  std::vector<double> gamma_grid;
  std::vector<double> temperature_grid;
  int initial_site = 0;  // 0-based
  std::vector<SweepPoint> runs;
};

// Default bath parameter grids: lambda 10..520 step 30 (18 values),
// gamma 25..500 step 25 (20 values), T 30..510 K step 20 (25 values).
std::vector<double> default_lambda_grid();
std::vector<double> default_gamma_grid();
std::vector<double> default_temperature_grid();

// Stable identifier derived from the parameters, e.g. "lam40_gam100_T310".
std::string run_identifier(double lambda, double gamma, double temperature);

// Full Cartesian product of the grids in deterministic order, or, when
// subset is given, exactly those (lambda, gamma, T) triples. Duplicate
// triples raise ManifestError.
SweepManifest sweep_manifest(const std::vector<double>& lambda_grid,
                             const std::vector<double>& gamma_grid,
                             const std::vector<double>& temperature_grid,
                             const std::vector<std::array<double, 3>>* subset = nullptr,
                             int initial_site = 0);

// Manifest file: '#'-prefixed header, then one "run_id lambda gamma T" row
// per run.
void write_manifest(const SweepManifest& manifest, const std::string& path);
SweepManifest read_manifest(const std::string& path);

// One aggregate row: the sampled observables feeding the entanglement vs
// coherence-length scatter. Sample times are {0.1, 0.5, 1.0, 2.0} ps by
// default, taken at the nearest output sample.
struct AggregateRow {
  std::string run_id;
  double lambda = 0.0;
  double gamma = 0.0;
  double temperature = 0.0;
  double ln_gamma_over_lambda = 0.0;
  double ln_gamma_beta = 0.0;
  double ln_Lambda = 0.0;
  std::vector<double> entanglement;      // one per sample time
  std::vector<double> coherence_length;  // one per sample time
};

std::vector<double> default_aggregate_times();  // fs

AggregateRow make_aggregate_row(const SweepPoint& point, double g,
                                const MeasureSeries& series,
                                const std::vector<double>& sample_times = default_aggregate_times());

void write_aggregate(const std::vector<AggregateRow>& rows,
                     const std::vector<double>& sample_times,
                     const std::string& path);

}  // namespace heom
