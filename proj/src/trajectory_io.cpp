#include "heom/trajectory_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "heom/errors.hpp"

namespace heom {

namespace {

constexpr const char* kTrajectoryVersion = "heom trajectory v1";
constexpr const char* kMeasuresVersion = "heom measures v1";

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Chops a data line into doubles; returns false on any non-numeric token.
bool parse_doubles(const std::string& line, std::vector<double>& out) {
  out.clear();
  const char* p = line.c_str();
  char* end = nullptr;
  for (;;) {
    while (*p == ' ' || *p == '\t' || *p == '\r') ++p;
    if (*p == '\0') return true;
    const double v = std::strtod(p, &end);
    if (end == p) return false;
    out.push_back(v);
    p = end;
  }
}

void write_parameter_record(std::ostream& out, const TrajectoryMeta& meta) {
  out << "# n_sites " << meta.n_sites << "\n";
  out << "# lambda " << fmt(meta.lambda) << "\n";
  out << "# gamma " << fmt(meta.gamma) << "\n";
  out << "# temperature " << fmt(meta.temperature) << "\n";
  out << "# n_matsubara " << meta.n_matsubara << "\n";
  out << "# level " << meta.level << "\n";
  out << "# dt " << fmt(meta.dt) << "\n";
  out << "# output_stride " << fmt(meta.output_stride) << "\n";
  out << "# initial_site " << (meta.initial_site >= 0 ? meta.initial_site + 1 : -1) << "\n";
  out << "# diagonal_offset " << fmt(meta.diagonal_offset) << "\n";
  out << "# hamiltonian_checksum "
      << (meta.hamiltonian_checksum.empty() ? "none" : meta.hamiltonian_checksum) << "\n";
  out << "# external " << (meta.external ? 1 : 0) << "\n";
  out << "# max_negative_population " << fmt(meta.max_negative_population) << "\n";
}

struct HeaderParser {
  std::string path;
  std::map<std::string, std::string> keys;
  long line_no = 0;

  bool has(const std::string& k) const { return keys.count(k) > 0; }
  std::string str(const std::string& k) const {
    auto it = keys.find(k);
    if (it == keys.end()) throw ParseError(path, line_no, "missing header key \"" + k + "\"");
    return it->second;
  }
  double num(const std::string& k) const {
    const std::string v = str(k);
    char* end = nullptr;
    const double x = std::strtod(v.c_str(), &end);
    if (end == v.c_str()) throw ParseError(path, line_no, "header key \"" + k + "\" is not numeric");
    return x;
  }
  long integer(const std::string& k) const { return std::lround(num(k)); }
};

void read_parameter_record(const HeaderParser& h, TrajectoryMeta& meta) {
  meta.n_sites = static_cast<int>(h.integer("n_sites"));
  meta.lambda = h.has("lambda") ? h.num("lambda") : NAN;
  meta.gamma = h.has("gamma") ? h.num("gamma") : NAN;
  meta.temperature = h.has("temperature") ? h.num("temperature") : NAN;
  meta.n_matsubara = h.has("n_matsubara") ? static_cast<int>(h.integer("n_matsubara")) : -1;
  meta.level = h.has("level") ? static_cast<int>(h.integer("level")) : -1;
  meta.dt = h.has("dt") ? h.num("dt") : NAN;
  meta.output_stride = h.has("output_stride") ? h.num("output_stride") : NAN;
  if (h.has("initial_site")) {
    const long site = h.integer("initial_site");
    meta.initial_site = site >= 1 ? static_cast<int>(site - 1) : -1;
  }
  meta.diagonal_offset = h.has("diagonal_offset") ? h.num("diagonal_offset") : NAN;
  if (h.has("hamiltonian_checksum") && h.str("hamiltonian_checksum") != "none")
    meta.hamiltonian_checksum = h.str("hamiltonian_checksum");
  meta.external = h.has("external") && h.integer("external") != 0;
  meta.max_negative_population =
      h.has("max_negative_population") ? h.num("max_negative_population") : 0.0;
}

}  // namespace

void write_trajectory(const Trajectory& traj, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw UsageError("cannot open for writing: " + path);
  const int n = traj.meta.n_sites;

  out << "# " << kTrajectoryVersion << "\n";
  write_parameter_record(out, traj.meta);
  out << "# t_max " << fmt(traj.times.empty() ? 0.0 : traj.times.back()) << "\n";
  out << "# rows " << traj.times.size() << "\n";
  out << "# columns t_fs";
  for (int i = 1; i <= n; ++i) out << " pop_" << i;
  for (int i = 1; i <= n; ++i)
    for (int j = i + 1; j <= n; ++j) out << " re_" << i << "_" << j << " im_" << i << "_" << j;
  out << "\n";

  for (std::size_t t = 0; t < traj.times.size(); ++t) {
    const Eigen::MatrixXcd& rho = traj.states[t];
    out << fmt(traj.times[t]);
    for (int i = 0; i < n; ++i) out << ' ' << fmt(rho(i, i).real());
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        out << ' ' << fmt(rho(i, j).real()) << ' ' << fmt(rho(i, j).imag());
    out << "\n";
  }
  if (!out) throw UsageError("write failed: " + path);
}

Trajectory read_trajectory(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open trajectory file: " + path);

  HeaderParser header;
  header.path = path;
  std::string line;
  bool version_seen = false;
  std::string pending_data;
  while (std::getline(in, line)) {
    ++header.line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.find_first_not_of(" \t") == std::string::npos) continue;
    if (line[0] != '#') {
      pending_data = line;
      break;
    }
    std::istringstream ss(line.substr(1));
    if (!version_seen) {
      std::string rest = line.substr(1);
      const auto start = rest.find_first_not_of(' ');
      rest = start == std::string::npos ? "" : rest.substr(start);
      if (rest != kTrajectoryVersion)
        throw ParseError(path, header.line_no,
                         "unsupported format: expected \"# " + std::string(kTrajectoryVersion) +
                             "\", got \"" + line + "\"");
      version_seen = true;
      continue;
    }
    std::string key;
    ss >> key;
    std::string value;
    std::getline(ss, value);
    const auto start = value.find_first_not_of(' ');
    value = start == std::string::npos ? "" : value.substr(start);
    if (key == "columns") continue;
    header.keys[key] = value;
  }
  if (!version_seen) throw ParseError(path, header.line_no, "missing format version header");

  Trajectory traj;
  read_parameter_record(header, traj.meta);
  const int n = traj.meta.n_sites;
  if (n < 1 || n > 64) throw ParseError(path, header.line_no, "implausible n_sites in header");
  const long rows = header.integer("rows");
  if (rows < 1) throw ParseError(path, header.line_no, "row count must be >= 1");

  // Consistency of the declared grid with the row count.
  if (header.has("t_max") && header.has("output_stride")) {
    const double t_max = header.num("t_max");
    const double stride = header.num("output_stride");
    if (std::isfinite(t_max) && std::isfinite(stride) && stride > 0.0) {
      const long expected = std::lround(t_max / stride) + 1;
      if (expected != rows)
        throw ParseError(path, header.line_no,
                         "row count " + std::to_string(rows) + " inconsistent with t_max/stride (expected " +
                             std::to_string(expected) + ")");
    }
  }

  const std::size_t n_cols = 1 + n + static_cast<std::size_t>(n) * (n - 1);
  std::vector<double> values;
  traj.times.reserve(rows);
  traj.states.reserve(rows);
  long row = 0;
  auto consume_row = [&](const std::string& data, long line_no) {
    if (row >= rows)
      throw ParseError(path, line_no, "more data rows than the declared " + std::to_string(rows));
    if (!parse_doubles(data, values))
      throw ParseError(path, line_no, "non-numeric token in data row " + std::to_string(row + 1));
    if (values.size() != n_cols)
      throw ParseError(path, line_no, "data row " + std::to_string(row + 1) + " has " +
                                          std::to_string(values.size()) + " columns, expected " +
                                          std::to_string(n_cols));
    traj.times.push_back(values[0]);
    Eigen::MatrixXcd rho(n, n);
    std::size_t c = 1;
    for (int i = 0; i < n; ++i) rho(i, i) = values[c++];
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) {
        rho(i, j) = std::complex<double>(values[c], values[c + 1]);
        rho(j, i) = std::conj(rho(i, j));
        c += 2;
      }
    traj.states.push_back(std::move(rho));
    ++row;
  };

  if (!pending_data.empty()) consume_row(pending_data, header.line_no);
  while (std::getline(in, line)) {
    ++header.line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.find_first_not_of(" \t") == std::string::npos) continue;
    if (line[0] == '#') continue;
    consume_row(line, header.line_no);
  }
  if (row != rows)
    throw ParseError(path, header.line_no,
                     "file truncated: " + std::to_string(row) + " data rows, header declared " +
                         std::to_string(rows) + " (last complete row " + std::to_string(row) + ")");
  return traj;
}

void write_measures(const MeasureSeries& series, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw UsageError("cannot open for writing: " + path);

  out << "# " << kMeasuresVersion << "\n";
  write_parameter_record(out, series.meta);
  out << "# rows " << series.times.size() << "\n";
  out << "# pairs";
  for (const auto& p : series.pairs) out << ' ' << p.a + 1 << '-' << p.b + 1;
  out << "\n";
  out << "# columns t_fs E S L_rho";
  for (const auto& p : series.pairs) out << " C_" << p.a + 1 << '_' << p.b + 1;
  out << "\n";

  for (std::size_t t = 0; t < series.times.size(); ++t) {
    out << fmt(series.times[t]) << ' ' << fmt(series.global_entanglement[t]) << ' '
        << fmt(series.entropy[t]) << ' ' << fmt(series.coherence_length[t]);
    for (const auto& c : series.concurrences) out << ' ' << fmt(c[t]);
    out << "\n";
  }
  if (!out) throw UsageError("write failed: " + path);
}

void write_snapshot(const DensitySnapshot& snapshot, std::ostream& out) {
  const int n = static_cast<int>(snapshot.exact.rows());
  out << "# heom snapshot v1\n";
  out << "# t_requested " << fmt(snapshot.t_requested) << "\n";
  out << "# t_actual " << fmt(snapshot.t_actual) << "\n";
  out << "# off_grid " << (snapshot.off_grid ? 1 : 0)
      << (snapshot.off_grid ? "  (warning: requested time not on the output grid)" : "") << "\n";
  out << "# threshold " << fmt(snapshot.threshold) << "\n";
  out << "# magnitude |rho_nk|, one row per site\n";
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) out << (j ? " " : "") << fmt(snapshot.magnitude(i, j));
    out << "\n";
  }
  out << "# flagged (1 = |rho_nk| below threshold)\n";
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) out << (j ? " " : "") << (snapshot.flagged(i, j) ? 1 : 0);
    out << "\n";
  }
  out << "# exact re im pairs, one row per site\n";
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j)
      out << (j ? " " : "") << fmt(snapshot.exact(i, j).real()) << ' '
          << fmt(snapshot.exact(i, j).imag());
    out << "\n";
  }
}

namespace {

struct ColumnRole {
  enum Kind { kTime, kPopulation, kReal, kImag, kSkip } kind = kSkip;
  int i = 0, j = 0;  // 0-based sites for population/real/imag
};

ColumnRole parse_token(const std::string& token, int n_sites) {
  ColumnRole role;
  auto site_ok = [&](int s) { return s >= 1 && s <= n_sites; };
  if (token == "t") {
    role.kind = ColumnRole::kTime;
    return role;
  }
  if (token == "skip") {
    role.kind = ColumnRole::kSkip;
    return role;
  }
  int a = 0, b = 0;
  if (std::sscanf(token.c_str(), "pop_%d", &a) == 1 && site_ok(a)) {
    role.kind = ColumnRole::kPopulation;
    role.i = a - 1;
    return role;
  }
  if (std::sscanf(token.c_str(), "re_%d_%d", &a, &b) == 2 && site_ok(a) && site_ok(b) && a != b) {
    role.kind = ColumnRole::kReal;
    role.i = a - 1;
    role.j = b - 1;
    return role;
  }
  if (std::sscanf(token.c_str(), "im_%d_%d", &a, &b) == 2 && site_ok(a) && site_ok(b) && a != b) {
    role.kind = ColumnRole::kImag;
    role.i = a - 1;
    role.j = b - 1;
    return role;
  }
  throw ImportError("unrecognized layout token \"" + token + "\"");
}

}  // namespace

ExternalLayout parse_layout(const std::string& text, int n_sites) {
  ExternalLayout layout;
  layout.n_sites = n_sites;
  std::istringstream ss(text);
  std::string token;
  while (ss >> token) layout.tokens.push_back(token);
  if (layout.tokens.empty()) throw ImportError("empty column layout");

  // Validate full, single coverage of t, every population, every pair.
  int times = 0;
  std::set<int> pops;
  std::set<std::pair<int, int>> re_seen, im_seen;
  for (const auto& t : layout.tokens) {
    const ColumnRole role = parse_token(t, n_sites);
    switch (role.kind) {
      case ColumnRole::kTime:
        ++times;
        break;
      case ColumnRole::kPopulation:
        if (!pops.insert(role.i).second) throw ImportError("duplicate population column " + t);
        break;
      case ColumnRole::kReal: {
        auto key = std::minmax(role.i, role.j);
        if (!re_seen.insert({key.first, key.second}).second)
          throw ImportError("duplicate real-part column " + t);
        break;
      }
      case ColumnRole::kImag: {
        auto key = std::minmax(role.i, role.j);
        if (!im_seen.insert({key.first, key.second}).second)
          throw ImportError("duplicate imaginary-part column " + t);
        break;
      }
      case ColumnRole::kSkip:
        break;
    }
  }
  if (times != 1) throw ImportError("layout must name exactly one time column \"t\"");
  if (static_cast<int>(pops.size()) != n_sites)
    throw ImportError("layout must cover every site population");
  const std::size_t n_pairs = static_cast<std::size_t>(n_sites) * (n_sites - 1) / 2;
  if (re_seen.size() != n_pairs || im_seen.size() != n_pairs)
    throw ImportError("layout must cover the real and imaginary part of every site pair");
  return layout;
}

ExternalLayout identity_layout(int n_sites) {
  std::ostringstream ss;
  ss << "t";
  for (int i = 1; i <= n_sites; ++i) ss << " pop_" << i;
  for (int i = 1; i <= n_sites; ++i)
    for (int j = i + 1; j <= n_sites; ++j) ss << " re_" << i << "_" << j << " im_" << i << "_" << j;
  return parse_layout(ss.str(), n_sites);
}

Trajectory import_external(const std::string& path, const ExternalLayout& layout,
                           double tolerance) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open external trajectory: " + path);
  const int n = layout.n_sites;

  std::vector<ColumnRole> roles;
  roles.reserve(layout.tokens.size());
  for (const auto& t : layout.tokens) roles.push_back(parse_token(t, n));

  Trajectory traj;
  traj.meta.n_sites = n;
  traj.meta.external = true;
  traj.meta.lambda = traj.meta.gamma = traj.meta.temperature = NAN;
  traj.meta.dt = traj.meta.output_stride = traj.meta.diagonal_offset = NAN;
  traj.meta.n_matsubara = traj.meta.level = -1;

  std::string line;
  std::vector<double> values;
  long line_no = 0, row = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.find_first_not_of(" \t") == std::string::npos) continue;
    if (line[0] == '#') continue;
    if (!parse_doubles(line, values))
      throw ImportError(path + ":" + std::to_string(line_no) + ": non-numeric token in row " +
                        std::to_string(row + 1));
    if (values.size() != roles.size())
      throw ImportError(path + ":" + std::to_string(line_no) + ": row " + std::to_string(row + 1) +
                        " has " + std::to_string(values.size()) + " columns, layout names " +
                        std::to_string(roles.size()));

    double t = 0.0;
    Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(n, n);
    for (std::size_t c = 0; c < roles.size(); ++c) {
      const ColumnRole& role = roles[c];
      const double v = values[c];
      switch (role.kind) {
        case ColumnRole::kTime:
          t = v;
          break;
        case ColumnRole::kPopulation:
          rho(role.i, role.i) += v;
          break;
        case ColumnRole::kReal:
          rho(role.i, role.j) += v;
          rho(role.j, role.i) += v;
          break;
        case ColumnRole::kImag:
          rho(role.i, role.j) += std::complex<double>(0.0, v);
          rho(role.j, role.i) += std::complex<double>(0.0, -v);
          break;
        case ColumnRole::kSkip:
          break;
      }
    }

    const double trace_dev = std::abs(rho.trace() - 1.0);
    if (trace_dev > tolerance)
      throw ImportError(path + ":" + std::to_string(line_no) + ": row " + std::to_string(row + 1) +
                        " trace deviates from 1 by " + std::to_string(trace_dev) +
                        " (tolerance " + std::to_string(tolerance) + ")");
    for (int i = 0; i < n; ++i) {
      const double p = rho(i, i).real();
      if (p < -tolerance)
        throw ImportError(path + ":" + std::to_string(line_no) + ": row " +
                          std::to_string(row + 1) + " population of site " + std::to_string(i + 1) +
                          " is " + std::to_string(p));
      traj.meta.max_negative_population = std::min(traj.meta.max_negative_population, p);
    }
    traj.times.push_back(t);
    traj.states.push_back(std::move(rho));
    ++row;
  }
  if (traj.times.empty()) throw ImportError(path + ": no data rows");
  if (traj.times.size() >= 2) traj.meta.output_stride = traj.times[1] - traj.times[0];
  return traj;
}

}  // namespace heom
