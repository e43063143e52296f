// Command-line front end: spectra, rates, evolution, sweeps and the four
// figure presets.  Exit status follows dicke::exit_code.

#include <cmath>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "dicke/config.hpp"
#include "dicke/dispersive.hpp"
#include "dicke/dynamics.hpp"
#include "dicke/output.hpp"
#include "dicke/presets.hpp"
#include "dicke/scan.hpp"

namespace fs = std::filesystem;
using namespace dicke;

namespace {

struct Common {
  std::string config;
  std::string out = ".";
  std::optional<double> eta_factor;
  bool no_crt = false;
  bool svg = false;
  bool refine = false;
};

ScenarioConfig load(const Common& c) {
  require(!c.config.empty(), ErrorKind::Configuration, "this subcommand needs --config <path>");
  ScenarioConfig cfg = load_config(c.config);
  if (c.eta_factor) cfg.run.eta_factor = *c.eta_factor;
  if (c.no_crt) cfg.system.with_crt = false;
  cfg.validate();
  return cfg;
}

void emit(const Common& c, const std::string& stem, Table table, const PlotSpec* plot) {
  fs::create_directories(c.out);
  table.metadata.emplace(table.metadata.begin(), "command", stem);
  if (!c.config.empty()) table.metadata.emplace(table.metadata.begin() + 1, "config", c.config);
  const fs::path csv = fs::path(c.out) / (stem + ".csv");
  write_csv(csv.string(), table);
  std::cout << "wrote " << csv.string() << '\n';
  if (c.svg && plot) {
    const fs::path svg = fs::path(c.out) / (stem + ".svg");
    write_svg(svg.string(), table, *plot);
    std::cout << "wrote " << svg.string() << '\n';
  }
}

void print_warnings(const Trajectory& tr) {
  for (const auto& w : tr.stats.warnings) std::cerr << "warning: " << w << '\n';
}

void cmd_spectrum(const Common& c) {
  const ScenarioConfig cfg = load(c);
  require(cfg.basis == BasisKind::Collective, ErrorKind::Unsupported,
          "spectrum is labelled on the collective Dicke basis");
  const DressedSpectrum levels = spectrum_exact(cfg.space(), cfg.system);
  Table t;
  std::vector<Real> m, S, lambda, nu, overlap;
  for (const auto& e : levels.entries) {
    m.push_back(e.label.m);
    S.push_back(e.label.S);
    lambda.push_back(e.lambda);
    nu.push_back(e.nu);
    overlap.push_back(e.overlap);
  }
  t.add_column("m", m);
  t.add_column("S", S);
  t.add_column("lambda", lambda);
  t.add_column("nu", nu);
  t.add_column("overlap", overlap);
  std::cout << "spectrum: " << levels.entries.size() << " labelled levels\n";
  emit(c, "spectrum", std::move(t), nullptr);
}

void cmd_rates(const Common& c) {
  const ScenarioConfig cfg = load(c);
  const auto sch = collective_reference(cfg.driven_schedules());
  Table t;
  std::vector<Real> ns, xi_re, xi_im, xi_abs, eta_res, factor;
  for (int n = cfg.transition.k + 2; n <= cfg.n_max; ++n) {
    const TransitionRate r = two_photon_rate_closed_form(n, cfg.transition.k, cfg.system, sch);
    ns.push_back(n);
    xi_re.push_back(r.xi.real());
    xi_im.push_back(r.xi.imag());
    xi_abs.push_back(std::abs(r.xi));
    eta_res.push_back(r.eta_res);
    factor.push_back(r.eta_res / (2.0 * std::abs(cfg.system.detuning())));
  }
  t.metadata.emplace_back("k", std::to_string(cfg.transition.k));
  t.add_column("n", ns);
  t.add_column("xi_re", xi_re);
  t.add_column("xi_im", xi_im);
  t.add_column("abs_xi", xi_abs);
  t.add_column("eta_res", eta_res);
  t.add_column("eta_res_over_2delta", factor);
  const TransitionRate r = two_photon_rate_closed_form(cfg.transition.n, cfg.transition.k, cfg.system, sch);
  std::cout << std::setprecision(10) << "rates: |Xi_{" << cfg.transition.n << ',' << cfg.transition.k
            << ",2}| = " << std::abs(r.xi) << ", eta_res / 2|Delta| = "
            << r.eta_res / (2.0 * std::abs(cfg.system.detuning())) << '\n';
  emit(c, "rates", std::move(t), nullptr);
}

Table trajectory_table(const ScenarioConfig& cfg, const Trajectory& tr) {
  Table t;
  const Real scale = time_scale(cfg);
  std::vector<Real> times(tr.times.size());
  for (std::size_t i = 0; i < times.size(); ++i) times[i] = tr.times[i] / scale;
  t.metadata.emplace_back("time_unit", to_string(cfg.run.unit));
  t.add_column("t", times);
  for (const auto& sel : cfg.outputs.observables) t.add_column(sel, tr.series(sel));
  return t;
}

PlotSpec trajectory_plot(const ScenarioConfig& cfg, const std::string& title) {
  return {title, "t", cfg.outputs.observables, std::string("t (") + to_string(cfg.run.unit) + ")", ""};
}

void cmd_evolve(const Common& c) {
  const ScenarioConfig cfg = load(c);
  const Real t_end = cfg.run.t_span * time_scale(cfg);
  const SpaceSpec space = cfg.space();
  const auto sch = cfg.driven_schedules();
  const AffineHamiltonian h = cfg.basis == BasisKind::Collective ? hamiltonian_affine(space, cfg.system, sch)
                                                                 : realistic_affine(space, cfg.realistic(), sch);
  EvolveOptions o;
  o.tol = cfg.run.tol;
  if (!sch.empty()) o.tracked = make_scenario(cfg).target_indices();
  const Trajectory tr = evolve_schrodinger(h, cfg.initial_state(), {0.0, t_end}, cfg.run.samples, o);
  print_warnings(tr);
  std::cout << "evolve: " << tr.stats.steps << " steps, max norm drift " << tr.stats.max_norm_drift << '\n';
  const PlotSpec plot = trajectory_plot(cfg, "Unitary evolution");
  emit(c, "evolve", trajectory_table(cfg, tr), &plot);
}

void cmd_lindblad(const Common& c) {
  const ScenarioConfig cfg = load(c);
  require(cfg.dissipation.has_value(), ErrorKind::Configuration, "lindblad needs a [dissipation] section");
  const Real t_end = cfg.run.t_span * time_scale(cfg);
  const SpaceSpec space = cfg.space();
  const auto sch = cfg.driven_schedules();
  const AffineHamiltonian h = cfg.basis == BasisKind::Collective ? hamiltonian_affine(space, cfg.system, sch)
                                                                 : realistic_affine(space, cfg.realistic(), sch);
  EvolveOptions o;
  o.tol = cfg.run.tol;
  const Trajectory tr =
      evolve_lindblad(h, *cfg.dissipation, DensityMatrix::pure(cfg.initial_state()), {0.0, t_end}, cfg.run.samples, o);
  print_warnings(tr);
  std::cout << "lindblad: " << tr.stats.steps << " steps, max trace drift " << tr.stats.max_norm_drift
            << ", min eigenvalue " << tr.stats.min_eigenvalue << '\n';
  Table t = trajectory_table(cfg, tr);
  t.add_column("purity", tr.purity);
  const PlotSpec plot = trajectory_plot(cfg, "Lindblad evolution");
  emit(c, "lindblad", std::move(t), &plot);
}

void cmd_sweep(const Common& c) {
  const ScenarioConfig cfg = load(c);
  const Scenario sc = make_scenario(cfg);
  const Real scale = 2.0 * std::abs(cfg.system.detuning());
  SweepOptions so;
  so.grid_points = cfg.sweep.points;
  so.zoom = cfg.sweep.zoom;
  const SweepResult r = sweep_resonance(sc, {cfg.sweep.factor_lo * scale, cfg.sweep.factor_hi * scale}, so);

  Table t;
  std::vector<Real> factors(r.etas.size());
  for (std::size_t i = 0; i < factors.size(); ++i) factors[i] = r.etas[i] / scale;
  t.metadata.emplace_back("peak_eta", format_csv_real(r.peak_eta));
  t.metadata.emplace_back("peak_factor", format_csv_real(r.peak_eta / scale));
  t.metadata.emplace_back("peak_width", format_csv_real(r.peak_width));
  t.metadata.emplace_back("background", format_csv_real(r.background));
  t.metadata.emplace_back("grid_spacing", format_csv_real(r.grid_spacing));
  t.metadata.emplace_back("horizon", format_csv_real(r.horizon));
  t.add_column("eta", r.etas);
  t.add_column("eta_over_2delta", factors);
  t.add_column("transfer", r.transfer);
  std::cout << std::setprecision(8) << "sweep: peak eta / 2|Delta| = " << r.peak_eta / scale
            << ", max transfer " << r.peak_transfer << ", background " << r.background << '\n';
  const PlotSpec plot{"Resonance sweep", "eta_over_2delta", {"transfer"}, "eta / 2|Delta_-|", "max transfer"};
  emit(c, "sweep", std::move(t), &plot);
}

void cmd_figure(const Common& c, int number) {
  FigureOptions o;
  o.eta_factor = c.eta_factor;
  o.no_crt = c.no_crt;
  o.refine = c.refine;
  const FigureRun run = run_figure(number, o);
  for (const auto& line : run.summary) std::cout << line << '\n';
  for (const auto& a : run.artifacts) emit(c, a.stem, a.table, &a.plot);
}

void add_common(CLI::App* sub, Common& c, bool needs_config) {
  auto* opt = sub->add_option("--config", c.config, "scenario file (section.key = value)");
  if (needs_config) opt->required();
  sub->add_option("--out", c.out, "output directory")->capture_default_str();
  sub->add_option("--eta-factor", c.eta_factor, "drive at this multiple of 2|Delta_-|");
  sub->add_flag("--no-crt", c.no_crt, "drop the counter-rotating terms");
  sub->add_flag("--svg", c.svg, "also write an SVG line plot");
  if (!needs_config)
    sub->add_flag("--refine", c.refine, "locate each resonance near the preset factor before evolving");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dispersive Dicke model with modulated parameters"};
  app.require_subcommand(1);
  Common common;

  struct Entry {
    const char* name;
    const char* help;
    bool needs_config;
  };
  const Entry entries[] = {
      {"spectrum", "dressed spectrum of the static Hamiltonian", true},
      {"rates", "closed-form transition rates and resonance frequencies", true},
      {"evolve", "unitary evolution of the configured scenario", true},
      {"lindblad", "master-equation evolution with the configured dissipation", true},
      {"sweep", "scan the drive frequency and locate the resonance", true},
      {"figure1", "preset: N = 2 photon number under g modulation", false},
      {"figure2", "preset: N = 6 with coherent field, g and g+Omega modulation", false},
      {"figure3", "preset: photon and atomic distributions at the g+Omega resonance", false},
      {"figure4", "preset: two-qubit circuit, realistic and ideal", false},
  };
  for (const auto& e : entries) add_common(app.add_subcommand(e.name, e.help), common, e.needs_config);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int status = app.exit(e);
    return status == 0 ? 0 : exit_code(ErrorKind::Configuration);
  }

  const std::string name = app.get_subcommands().front()->get_name();
  try {
    if (name == "spectrum") cmd_spectrum(common);
    else if (name == "rates") cmd_rates(common);
    else if (name == "evolve") cmd_evolve(common);
    else if (name == "lindblad") cmd_lindblad(common);
    else if (name == "sweep") cmd_sweep(common);
    else cmd_figure(common, name.back() - '0');
  } catch (const Error& e) {
    std::cerr << "error[" << to_string(e.kind()) << "]: " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error[configuration]: " << e.what() << '\n';
    return exit_code(ErrorKind::Configuration);
  }
  return 0;
}
