#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "heom/measures.hpp"
#include "heom/propagate.hpp"

namespace heom {

// Plain-text trajectory format, version "heom trajectory v1": '#'-prefixed
// header lines (format version, N, parameter record, row count, column key),
// then one row per output time with t_fs, the N real populations, and the
// re/im pairs of the upper triangle row by row. Values are printed with 17
// significant digits so that read(write(traj)) is bit-exact; the reader
// rebuilds the lower triangle by conjugate symmetry.
void write_trajectory(const Trajectory& traj, const std::string& path);
Trajectory read_trajectory(const std::string& path);

void write_measures(const MeasureSeries& series, const std::string& path);

void write_snapshot(const DensitySnapshot& snapshot, std::ostream& out);

// Column layout of an external trajectory file: one token per column,
// whitespace separated. Tokens: "t" (time, fs), "pop_I" (population of site
// I), "re_I_J" / "im_I_J" (real/imaginary part of rho_IJ, I != J), "skip".
// Site labels are 1-based. Every site population and every unordered pair
// must be covered exactly once.
struct ExternalLayout {
  int n_sites = 0;
  std::vector<std::string> tokens;
};

ExternalLayout parse_layout(const std::string& text, int n_sites);

// Layout matching the internal body format.
ExternalLayout identity_layout(int n_sites);

// Reads an externally published trajectory ('#' comment lines ignored).
// States violating unit trace or population reality beyond tolerance are
// rejected with the first offending row named.
Trajectory import_external(const std::string& path, const ExternalLayout& layout,
                           double tolerance = 1e-6);

}  // namespace heom
