#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "heom/correlation.hpp"
#include "heom/errors.hpp"
#include "heom/hierarchy.hpp"
#include "heom/measures.hpp"
#include "heom/model.hpp"
#include "heom/propagate.hpp"
#include "heom/sweep.hpp"
#include "heom/trajectory_io.hpp"
#include "heom/units.hpp"
#include "heom/validate.hpp"

namespace {

using namespace heom;

struct RunConfig {
  std::string model = "fmo8";
  double lambda = 40.0;
  double gamma = 100.0;
  double temperature = 310.0;
  int n_matsubara = 0;
  double dt = 1.0;
  double t_max = 2000.0;
  double stride = 1.0;
  int level = 4;
  int site = 1;  // 1-based, matching file formats and summaries
  std::string out;
  int workers = 0;  // 0 resolves to HEOM_WORKERS, then 1
};

struct ConfigOptions {
  CLI::Option* model = nullptr;
  CLI::Option* lambda = nullptr;
  CLI::Option* gamma = nullptr;
  CLI::Option* temperature = nullptr;
  CLI::Option* matsubara = nullptr;
  CLI::Option* dt = nullptr;
  CLI::Option* t_max = nullptr;
  CLI::Option* stride = nullptr;
  CLI::Option* level = nullptr;
  CLI::Option* site = nullptr;
  CLI::Option* out = nullptr;
  CLI::Option* workers = nullptr;
};

ConfigOptions add_run_options(CLI::App* cmd, RunConfig& cfg) {
  ConfigOptions o;
  o.model = cmd->add_option("--model", cfg.model,
                            "built-in model name (fmo8) or Hamiltonian file path");
  o.lambda = cmd->add_option("--lambda", cfg.lambda, "bath reorganization energy (cm^-1)");
  o.gamma = cmd->add_option("--gamma", cfg.gamma, "bath cutoff frequency (cm^-1)");
  o.temperature = cmd->add_option("--temp", cfg.temperature, "temperature (K)");
  o.matsubara = cmd->add_option("--matsubara", cfg.n_matsubara, "number of Matsubara modes K");
  o.dt = cmd->add_option("--dt", cfg.dt, "integrator step (fs)");
  o.t_max = cmd->add_option("--t-max", cfg.t_max, "propagation horizon (fs)");
  o.stride = cmd->add_option("--stride", cfg.stride, "output sample spacing (fs)");
  o.level = cmd->add_option("--level", cfg.level, "hierarchy truncation depth L");
  o.site = cmd->add_option("--site", cfg.site, "initial excitation site (1-based)");
  o.out = cmd->add_option("--out", cfg.out, "output directory");
  o.workers = cmd->add_option("--workers", cfg.workers, "parallel run workers");
  return o;
}

// Configuration file: one "key value" pair per line, '#' comments. CLI flags
// that were given explicitly take precedence over file values.
void apply_config_file(const std::string& path, RunConfig& cfg, const ConfigOptions& o) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file: " + path);

  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;

    std::istringstream ss(line);
    std::string key, value;
    ss >> key;
    std::getline(ss, value);
    const auto start = value.find_first_not_of(" \t");
    value = start == std::string::npos ? "" : value.substr(start);
    if (value.empty()) throw ParseError(path, line_no, "key \"" + key + "\" has no value");

    auto number = [&]() {
      char* end = nullptr;
      const double v = std::strtod(value.c_str(), &end);
      if (end == value.c_str() || *end != '\0')
        throw ParseError(path, line_no, "value for \"" + key + "\" is not a number");
      return v;
    };
    auto integer = [&]() { return static_cast<int>(std::lround(number())); };
    auto overridden = [](const CLI::Option* opt) { return opt && opt->count() > 0; };

    if (key == "model") {
      if (!overridden(o.model)) cfg.model = value;
    } else if (key == "lambda") {
      if (!overridden(o.lambda)) cfg.lambda = number();
    } else if (key == "gamma") {
      if (!overridden(o.gamma)) cfg.gamma = number();
    } else if (key == "temperature" || key == "temp") {
      if (!overridden(o.temperature)) cfg.temperature = number();
    } else if (key == "matsubara") {
      if (!overridden(o.matsubara)) cfg.n_matsubara = integer();
    } else if (key == "dt") {
      if (!overridden(o.dt)) cfg.dt = number();
    } else if (key == "t_max") {
      if (!overridden(o.t_max)) cfg.t_max = number();
    } else if (key == "stride") {
      if (!overridden(o.stride)) cfg.stride = number();
    } else if (key == "level") {
      if (!overridden(o.level)) cfg.level = integer();
    } else if (key == "site") {
      if (!overridden(o.site)) cfg.site = integer();
    } else if (key == "out") {
      if (!overridden(o.out)) cfg.out = value;
    } else if (key == "workers") {
      if (!overridden(o.workers)) cfg.workers = integer();
    } else {
      throw ParseError(path, line_no, "unknown config key \"" + key + "\"");
    }
  }
}

void write_config_file(const RunConfig& cfg, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw UsageError("cannot open for writing: " + path);
  char buf[40];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  out << "# heom run config v1\n";
  out << "model " << cfg.model << "\n";
  out << "lambda " << num(cfg.lambda) << "\n";
  out << "gamma " << num(cfg.gamma) << "\n";
  out << "temperature " << num(cfg.temperature) << "\n";
  out << "matsubara " << cfg.n_matsubara << "\n";
  out << "dt " << num(cfg.dt) << "\n";
  out << "t_max " << num(cfg.t_max) << "\n";
  out << "stride " << num(cfg.stride) << "\n";
  out << "level " << cfg.level << "\n";
  out << "site " << cfg.site << "\n";
  if (!cfg.out.empty()) out << "out " << cfg.out << "\n";
  if (cfg.workers > 0) out << "workers " << cfg.workers << "\n";
}

std::vector<SitePair> parse_pairs(const std::vector<std::string>& tokens, int n_sites) {
  if (tokens.empty()) return default_pairs();
  std::vector<SitePair> pairs;
  for (const auto& token : tokens) {
    int a = 0, b = 0;
    char extra = 0;
    if (std::sscanf(token.c_str(), "%d,%d%c", &a, &b, &extra) != 2)
      throw UsageError("pair \"" + token + "\" must look like \"1,2\"");
    if (a < 1 || a > n_sites || b < 1 || b > n_sites || a == b)
      throw UsageError("pair \"" + token + "\" is out of range for " + std::to_string(n_sites) +
                       " sites");
    pairs.push_back({a - 1, b - 1});
  }
  return pairs;
}

int resolve_workers(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("HEOM_WORKERS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return 1;
}

void check_site(int site, int n_sites) {
  if (site < 1 || site > n_sites)
    throw UsageError("initial site " + std::to_string(site) + " is out of range 1.." +
                     std::to_string(n_sites));
}

std::string format_g(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

void print_summary(const RunConfig& cfg, const ExcitonHamiltonian& h, const Trajectory& traj,
                   const MeasureSeries& series) {
  const int n = h.n_sites;
  std::cout << "run " << run_identifier(cfg.lambda, cfg.gamma, cfg.temperature) << ": " << n
            << " sites, L=" << cfg.level << ", K=" << cfg.n_matsubara << ", dt=" << cfg.dt
            << " fs, t_max=" << cfg.t_max << " fs, " << traj.times.size() << " samples\n";

  std::cout << "final populations:";
  const Eigen::MatrixXcd& last = traj.states.back();
  for (int i = 0; i < n; ++i)
    std::cout << (i ? " " : " ") << std::fixed << std::setprecision(4) << last(i, i).real();
  std::cout.unsetf(std::ios::floatfield);
  std::cout << "\n";

  double max_e = 0.0, t_at = 0.0;
  for (std::size_t i = 0; i < series.times.size(); ++i)
    if (series.global_entanglement[i] > max_e) {
      max_e = series.global_entanglement[i];
      t_at = series.times[i];
    }
  std::cout << "max E = " << std::setprecision(4) << max_e << " at t = " << format_g(t_at)
            << " fs\n";
  std::cout << "final L_rho = " << std::setprecision(4) << series.coherence_length.back() << "\n";

  const BathSpec bath{cfg.lambda, cfg.gamma, cfg.temperature, cfg.n_matsubara};
  if (cfg.lambda == 0.0) {
    std::cout << "unitary limit (lambda = 0): Lambda and ln(gamma/lambda) undefined, "
              << "ln(gamma*beta) = " << std::setprecision(4)
              << std::log(bath.gamma * bath.beta()) << "\n";
    return;
  }
  const EfficiencyDiagnostics diag = efficiency_diagnostics(bath, average_energy_gap(h));
  std::cout << "Lambda = " << std::setprecision(4) << diag.Lambda
            << ", ln(gamma/lambda) = " << diag.ln_gamma_over_lambda
            << ", ln(gamma*beta) = " << diag.ln_gamma_beta << "\n";
}

int cmd_simulate(const RunConfig& cfg, const std::vector<std::string>& pair_tokens) {
  const ExcitonHamiltonian h = resolve_model(cfg.model);
  check_site(cfg.site, h.n_sites);
  BathSpec bath{cfg.lambda, cfg.gamma, cfg.temperature, cfg.n_matsubara};
  validate_bath(bath);
  const std::vector<SitePair> pairs = parse_pairs(pair_tokens, h.n_sites);

  const std::string outdir =
      cfg.out.empty() ? "run_" + run_identifier(cfg.lambda, cfg.gamma, cfg.temperature) : cfg.out;
  std::filesystem::create_directories(outdir);

  const Hierarchy hierarchy(h, bath, cfg.level, HierarchyBudget{});
  PropagationConfig pc;
  pc.dt = cfg.dt;
  pc.t_max = cfg.t_max;
  pc.output_stride = cfg.stride;
  pc.level = cfg.level;

  const Trajectory traj = propagate(site_state(h.n_sites, cfg.site - 1), hierarchy, pc);
  const MeasureSeries series = trajectory_measures(traj, pairs);

  write_trajectory(traj, outdir + "/trajectory.txt");
  write_measures(series, outdir + "/measures.txt");
  write_config_file(cfg, outdir + "/config.txt");

  print_summary(cfg, h, traj, series);
  std::cout << "wrote " << outdir << "/trajectory.txt, measures.txt, config.txt\n";
  return 0;
}

int cmd_converge(const RunConfig& cfg, double tol_pop, int max_level, int max_matsubara,
                 long max_indices) {
  const ExcitonHamiltonian h = resolve_model(cfg.model);
  check_site(cfg.site, h.n_sites);
  BathSpec bath{cfg.lambda, cfg.gamma, cfg.temperature, cfg.n_matsubara};
  validate_bath(bath);

  PropagationConfig base;
  base.dt = cfg.dt;
  base.t_max = cfg.t_max;
  base.output_stride = cfg.stride;
  base.level = cfg.level;
  ConvergenceBudget budget;
  budget.max_level = max_level;
  budget.max_matsubara = max_matsubara;
  budget.max_indices = max_indices;

  std::cout << "base: L=" << cfg.level << ", K=" << cfg.n_matsubara << ", tolerance " << tol_pop
            << "\n";
  std::cout << "   L   K   max population delta\n" << std::flush;
  const auto print_step = [](const ConvergenceStep& step) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%4d %3d   %.3e\n", step.level, step.n_matsubara,
                  step.max_pop_delta);
    std::cout << buf << std::flush;
  };
  const ConvergenceResult res =
      converge(h, bath, site_state(h.n_sites, cfg.site - 1), base, tol_pop, budget, print_step);
  std::cout << "converged at L=" << res.level << ", K=" << res.n_matsubara << "\n";

  const std::string outdir =
      cfg.out.empty() ? "converge_" + run_identifier(cfg.lambda, cfg.gamma, cfg.temperature)
                      : cfg.out;
  std::filesystem::create_directories(outdir);
  write_trajectory(res.trajectory, outdir + "/trajectory.txt");
  write_measures(trajectory_measures(res.trajectory), outdir + "/measures.txt");
  RunConfig converged = cfg;
  converged.level = res.level;
  converged.n_matsubara = res.n_matsubara;
  write_config_file(converged, outdir + "/config.txt");
  std::cout << "wrote " << outdir << "/trajectory.txt, measures.txt, config.txt\n";
  return 0;
}

int cmd_sweep(const RunConfig& cfg, const std::string& manifest_path, bool site_overridden) {
  const ExcitonHamiltonian h = resolve_model(cfg.model);
  check_site(cfg.site, h.n_sites);
  const double g = average_energy_gap(h);

  SweepManifest manifest;
  if (manifest_path.empty()) {
    manifest = sweep_manifest(default_lambda_grid(), default_gamma_grid(),
                              default_temperature_grid(), nullptr, cfg.site - 1);
  } else {
    manifest = read_manifest(manifest_path);
    if (site_overridden) manifest.initial_site = cfg.site - 1;
  }
  check_site(manifest.initial_site + 1, h.n_sites);

  const std::string outdir = cfg.out.empty() ? "sweep" : cfg.out;
  std::filesystem::create_directories(outdir);
  write_manifest(manifest, outdir + "/manifest.txt");
  write_config_file(cfg, outdir + "/config.txt");

  const std::size_t total = manifest.runs.size();
  std::vector<std::optional<AggregateRow>> rows(total);
  std::vector<std::string> failures;
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> done{0};
  std::mutex log_mutex;

  auto work = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= total) return;
      const SweepPoint& point = manifest.runs[i];
      try {
        BathSpec bath{point.lambda, point.gamma, point.temperature, cfg.n_matsubara};
        validate_bath(bath);
        const Hierarchy hierarchy(h, bath, cfg.level, HierarchyBudget{});
        PropagationConfig pc;
        pc.dt = cfg.dt;
        pc.t_max = cfg.t_max;
        pc.output_stride = cfg.stride;
        pc.level = cfg.level;
        const Trajectory traj =
            propagate(site_state(h.n_sites, manifest.initial_site), hierarchy, pc);
        const MeasureSeries series = trajectory_measures(traj);
        write_trajectory(traj, outdir + "/" + point.run_id + "_trajectory.txt");
        write_measures(series, outdir + "/" + point.run_id + "_measures.txt");
        rows[i] = make_aggregate_row(point, g, series);
      } catch (const std::exception& e) {
        const std::lock_guard<std::mutex> lock(log_mutex);
        failures.push_back(point.run_id + ": " + e.what());
      }
      const std::size_t k = done.fetch_add(1) + 1;
      const std::lock_guard<std::mutex> lock(log_mutex);
      std::cout << "[" << k << "/" << total << "] " << point.run_id << "\n" << std::flush;
    }
  };

  const int n_workers = resolve_workers(cfg.workers);
  std::vector<std::thread> pool;
  for (int w = 1; w < n_workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();

  std::vector<AggregateRow> ordered;
  ordered.reserve(total);
  for (auto& r : rows)
    if (r) ordered.push_back(std::move(*r));
  write_aggregate(ordered, default_aggregate_times(), outdir + "/aggregate.txt");

  std::cout << "completed " << ordered.size() << "/" << total << " runs, aggregate written to "
            << outdir << "/aggregate.txt\n";
  if (!failures.empty()) {
    std::cout << failures.size() << " failed runs:\n";
    for (const auto& f : failures) std::cout << "  " << f << "\n";
  }
  return 0;
}

struct MeasureArgs {
  std::string trajectory_path;
  std::string out;
  std::string model;
  std::string layout_text;
  std::string layout_file;
  std::vector<std::string> pair_tokens;
  bool external = false;
  int n_sites = 8;
  double tolerance = 1e-6;
  double snapshot_t = -1.0;
  double threshold = 0.005;
  bool snapshot_requested = false;
};

int cmd_measure(const MeasureArgs& args) {
  Trajectory traj;
  if (args.external || !args.layout_text.empty() || !args.layout_file.empty()) {
    std::string layout_text = args.layout_text;
    if (!args.layout_file.empty()) {
      std::ifstream in(args.layout_file);
      if (!in) throw UsageError("cannot open layout file: " + args.layout_file);
      std::stringstream ss;
      ss << in.rdbuf();
      layout_text = ss.str();
    }
    const ExternalLayout layout = layout_text.empty()
                                      ? identity_layout(args.n_sites)
                                      : parse_layout(layout_text, args.n_sites);
    traj = import_external(args.trajectory_path, layout, args.tolerance);
  } else {
    traj = read_trajectory(args.trajectory_path);
  }

  if (!args.model.empty() && !traj.meta.hamiltonian_checksum.empty()) {
    const std::string expected = hamiltonian_checksum(resolve_model(args.model));
    if (expected != traj.meta.hamiltonian_checksum)
      throw ImportError("Hamiltonian checksum mismatch: trajectory header has " +
                        traj.meta.hamiltonian_checksum + ", model \"" + args.model + "\" gives " +
                        expected);
  }

  const MeasureSeries series =
      trajectory_measures(traj, parse_pairs(args.pair_tokens, traj.meta.n_sites));

  std::string out = args.out;
  if (out.empty()) {
    out = args.trajectory_path;
    const auto dot = out.find_last_of('.');
    if (dot != std::string::npos && out.find('/', dot) == std::string::npos) out.resize(dot);
    out += "_measures.txt";
  }
  write_measures(series, out);
  std::cout << "wrote " << out << " (" << series.times.size() << " samples)\n";

  if (args.snapshot_requested) {
    const DensitySnapshot snap = density_snapshot(traj, args.snapshot_t, args.threshold);
    write_snapshot(snap, std::cout);
  }
  return 0;
}

int cmd_validate(const std::vector<int>& criteria) {
  const std::vector<CheckResult> results = run_validation(criteria, &std::cout);
  return print_validation_report(results, std::cout) ? 0 : 4;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hierarchical equations of motion for excitonic energy transfer"};
  app.require_subcommand(1);
  int exit_code = 0;

  RunConfig sim_cfg;
  std::string sim_config_file;
  std::vector<std::string> sim_pairs;
  CLI::App* sim = app.add_subcommand("simulate", "propagate one trajectory and its measures");
  const ConfigOptions sim_opts = add_run_options(sim, sim_cfg);
  sim->add_option("--config", sim_config_file, "key-value configuration file");
  sim->add_option("--pairs", sim_pairs, "concurrence site pairs, e.g. 1,2 1,3 3,4");
  sim->callback([&]() {
    if (!sim_config_file.empty()) apply_config_file(sim_config_file, sim_cfg, sim_opts);
    exit_code = cmd_simulate(sim_cfg, sim_pairs);
  });

  RunConfig conv_cfg;
  conv_cfg.level = 1;
  std::string conv_config_file;
  double conv_tol = 0.01;
  int conv_max_level = 12, conv_max_matsubara = 8;
  long conv_max_indices = 400000;
  CLI::App* conv = app.add_subcommand("converge", "raise L then K until populations settle");
  const ConfigOptions conv_opts = add_run_options(conv, conv_cfg);
  conv->add_option("--config", conv_config_file, "key-value configuration file");
  conv->add_option("--tol", conv_tol, "max allowed population delta between ladder steps");
  conv->add_option("--max-level", conv_max_level, "depth budget");
  conv->add_option("--max-matsubara", conv_max_matsubara, "Matsubara budget");
  conv->add_option("--max-indices", conv_max_indices, "hierarchy size budget");
  conv->callback([&]() {
    if (!conv_config_file.empty()) apply_config_file(conv_config_file, conv_cfg, conv_opts);
    exit_code = cmd_converge(conv_cfg, conv_tol, conv_max_level, conv_max_matsubara,
                             conv_max_indices);
  });

  RunConfig sweep_cfg;
  std::string sweep_config_file, sweep_manifest_path;
  CLI::App* swp = app.add_subcommand("sweep", "run a bath-parameter grid and aggregate it");
  const ConfigOptions sweep_opts = add_run_options(swp, sweep_cfg);
  swp->add_option("--config", sweep_config_file, "key-value configuration file");
  swp->add_option("--manifest", sweep_manifest_path,
                  "manifest file (default: full lambda x gamma x T product)");
  swp->callback([&]() {
    if (!sweep_config_file.empty()) apply_config_file(sweep_config_file, sweep_cfg, sweep_opts);
    exit_code = cmd_sweep(sweep_cfg, sweep_manifest_path, sweep_opts.site->count() > 0);
  });

  MeasureArgs margs;
  CLI::App* meas = app.add_subcommand("measure", "compute measures from a trajectory file");
  meas->add_option("trajectory", margs.trajectory_path, "trajectory file")->required();
  meas->add_option("--out", margs.out, "measures output path");
  meas->add_option("--model", margs.model,
                   "verify the trajectory's Hamiltonian checksum against this model");
  meas->add_flag("--external", margs.external, "input is an external table, not a native file");
  meas->add_option("--sites", margs.n_sites, "site count of an external table");
  meas->add_option("--layout", margs.layout_text,
                   "external column layout, e.g. \"t pop_1 ... re_1_2 im_1_2 ...\"");
  meas->add_option("--layout-file", margs.layout_file, "file holding the external column layout");
  meas->add_option("--tolerance", margs.tolerance, "trace/positivity tolerance for imports");
  meas->add_option("--pairs", margs.pair_tokens, "concurrence site pairs, e.g. 1,2 1,3 3,4");
  CLI::Option* snap_opt =
      meas->add_option("--snapshot", margs.snapshot_t, "print the density matrix nearest this time (fs)");
  meas->add_option("--threshold", margs.threshold, "magnitude below which snapshot entries are flagged");
  meas->callback([&]() {
    margs.snapshot_requested = snap_opt->count() > 0;
    exit_code = cmd_measure(margs);
  });

  std::vector<int> criteria;
  CLI::App* val = app.add_subcommand("validate", "run the acceptance suite");
  val->add_option("criteria", criteria, "criteria to run (default: all of 1..10)");
  val->callback([&]() { exit_code = cmd_validate(criteria); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const DivergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ConvergenceBudgetError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return exit_code;
}
