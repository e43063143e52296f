#include "dicke/presets.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "dicke/dispersive.hpp"
#include "dicke/dynamics.hpp"

namespace dicke {

namespace {

constexpr Real kPi = std::numbers::pi;

std::string num(Real x) { return format_csv_real(x); }

std::vector<Real> scaled(const std::vector<Real>& xs, Real factor) {
  std::vector<Real> out(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) out[i] = xs[i] * factor;
  return out;
}

void describe(Table& t, const std::string& label, const ScenarioConfig& c) {
  const std::string p = label.empty() ? "" : label + ".";
  t.metadata.emplace_back(p + "N", std::to_string(c.system.N));
  t.metadata.emplace_back(p + "basis", c.basis == BasisKind::Collective ? "collective" : "distinguishable");
  t.metadata.emplace_back(p + "n_max", std::to_string(c.n_max));
  t.metadata.emplace_back(p + "omega0", num(c.system.omega0));
  t.metadata.emplace_back(p + "Omega0", num(c.system.Omega0));
  t.metadata.emplace_back(p + "g0", num(c.system.g0));
  t.metadata.emplace_back(p + "crt", c.system.with_crt ? "true" : "false");
  if (!c.qubit_Omega.empty()) {
    t.metadata.emplace_back(p + "qubit_Omega", num(c.qubit_Omega[0]) + " " + num(c.qubit_Omega[1]));
    t.metadata.emplace_back(p + "qubit_g", num(c.qubit_g[0]) + " " + num(c.qubit_g[1]));
  }
  const auto sch = c.driven_schedules();
  for (std::size_t i = 0; i < sch.size(); ++i) {
    std::ostringstream os;
    os << to_string(sch[i].target) << " qubit " << sch[i].qubit << " epsilon " << num(sch[i].epsilon)
       << " eta " << num(sch[i].eta) << " phi " << num(sch[i].phi);
    t.metadata.emplace_back(p + "schedule." + std::to_string(i), os.str());
  }
  if (c.run.eta_factor) t.metadata.emplace_back(p + "eta_factor", num(*c.run.eta_factor));
  if (c.dissipation) {
    const auto& d = *c.dissipation;
    t.metadata.emplace_back(p + "kappa", num(d.kappa));
    if (!d.gamma.empty()) t.metadata.emplace_back(p + "gamma", num(d.gamma[0]) + " " + num(d.gamma[1]));
    if (!d.gamma_phi.empty())
      t.metadata.emplace_back(p + "gamma_phi", num(d.gamma_phi[0]) + " " + num(d.gamma_phi[1]));
  }
  std::ostringstream init;
  if (c.initial.kind == InitialKind::DickeFock)
    init << "dicke_fock k " << c.initial.k << " n " << c.initial.n;
  else
    init << "coherent alpha_squared " << num(c.initial.alpha_squared) << " k " << c.initial.k;
  t.metadata.emplace_back(p + "initial", init.str());
  t.metadata.emplace_back(p + "tol", num(c.run.tol));
}

// The quoted factors carry four digits while the resonance is only a few
// 1e-5 wide in factor units, so the rounded value can sit on the flank.
Real refined_factor(const ScenarioConfig& c, Real factor) {
  const Real scale = 2.0 * std::abs(c.system.detuning());
  const Scenario sc = make_scenario(c);
  SweepOptions so;
  so.grid_points = 21;
  const SweepResult r = sweep_resonance(sc, {(factor - 0.002) * scale, (factor + 0.002) * scale}, so);
  return refine_resonance(sc, r) / scale;
}

ScenarioConfig apply(ScenarioConfig c, const FigureOptions& o, Real preset_factor) {
  c.run.eta_factor = o.eta_factor.value_or(preset_factor);
  if (o.samples > 0) c.run.samples = o.samples;
  return c;
}

ScenarioConfig refined(ScenarioConfig c, const FigureOptions& o) {
  if (o.refine) c.run.eta_factor = refined_factor(c, *c.run.eta_factor);
  return c;
}

Trajectory run_unitary(const ScenarioConfig& c, Real t_end) {
  const Scenario sc = make_scenario(c);
  EvolveOptions opts = sc.evolve;
  opts.tracked = sc.target_indices();
  return evolve_floquet_sampled(sc.hamiltonian(sc.schedules.front().eta), sc.initial, {0.0, t_end},
                                c.run.samples, opts);
}

std::vector<Real> series_of(const Trajectory& tr, const std::string& selector) { return tr.series(selector); }

FigureRun figure1(const FigureOptions& o) {
  const ScenarioConfig crt = refined(apply(figure1_config(true), o, kFigure1FactorCrt), o);
  const ScenarioConfig tc = refined(apply(figure1_config(false), o, kFigure1FactorTc), o);
  const TransitionRate xi = two_photon_rate_closed_form(crt.transition.n, crt.transition.k, crt.system,
                                                        collective_reference(crt.driven_schedules()));
  const Real q = std::abs(xi.xi);
  const Real t_end = crt.run.t_span / q;

  FigureArtifact art;
  art.stem = "figure1";
  Table& t = art.table;
  t.metadata.emplace_back("preset", "figure1");
  t.metadata.emplace_back("time_unit", "q t / pi");
  t.metadata.emplace_back("q", num(q));
  t.metadata.emplace_back("analytic", "two-level effective model at exact resonance");
  describe(t, "crt", crt);
  describe(t, "tc", tc);

  const Trajectory exact_tc = run_unitary(tc, t_end);
  std::vector<Real> times = exact_tc.times;
  t.add_column("t_q_over_pi", scaled(times, q / kPi));

  std::vector<Real> nph(times.size()), nat_analytic(times.size());
  const int n_from = crt.transition.n - crt.transition.k;
  for (std::size_t i = 0; i < times.size(); ++i) {
    const auto [bT, bS] = rwa_solution(1.0, 0.0, xi.xi, times[i]);
    nph[i] = n_from * std::norm(bT) + (n_from - 2) * std::norm(bS);
    nat_analytic[i] = crt.transition.k * std::norm(bT) + (crt.transition.k + 2) * std::norm(bS);
  }
  t.add_column("n_ph_analytic", nph);

  FigureRun run;
  if (!o.no_crt) {
    const Trajectory exact_crt = run_unitary(crt, t_end);
    t.add_column("n_ph_exact_crt", series_of(exact_crt, "n_ph"));
    t.add_column("n_ph_exact_tc", series_of(exact_tc, "n_ph"));
    t.add_column("n_at_analytic", nat_analytic);
    t.add_column("n_at_exact_crt", series_of(exact_crt, "n_at"));
    t.add_column("n_at_exact_tc", series_of(exact_tc, "n_at"));
    art.plot = {"Photon number under g modulation (N = 2)", "t_q_over_pi",
                {"n_ph_analytic", "n_ph_exact_crt", "n_ph_exact_tc"}, "q t / pi", "<n_ph>"};
  } else {
    t.add_column("n_ph_exact_tc", series_of(exact_tc, "n_ph"));
    t.add_column("n_at_analytic", nat_analytic);
    t.add_column("n_at_exact_tc", series_of(exact_tc, "n_at"));
    art.plot = {"Photon number under g modulation (N = 2)", "t_q_over_pi",
                {"n_ph_analytic", "n_ph_exact_tc"}, "q t / pi", "<n_ph>"};
  }
  run.summary.push_back("figure1: q = |Xi_{5,0,2}| = " + num(q));
  run.summary.push_back("figure1: eta factor CRT " + num(*crt.run.eta_factor) + ", TC " + num(*tc.run.eta_factor));
  run.artifacts.push_back(std::move(art));
  return run;
}

FigureRun figure2(const FigureOptions& o) {
  ScenarioConfig g = apply(figure2_config(false), o, kFigure2FactorG);
  ScenarioConfig go = apply(figure2_config(true), o, kFigure2FactorGOmega);
  if (o.no_crt) g.system.with_crt = go.system.with_crt = false;
  g = refined(std::move(g), o);
  go = refined(std::move(go), o);
  const Real q = reference_rate(g);
  const Real t_end = g.run.t_span / q;

  FigureArtifact art;
  art.stem = "figure2";
  Table& t = art.table;
  t.metadata.emplace_back("preset", "figure2");
  t.metadata.emplace_back("time_unit", "q t / pi, q from g modulation alone");
  t.metadata.emplace_back("q", num(q));
  describe(t, "g", g);
  describe(t, "g_Omega", go);

  const Trajectory a = run_unitary(g, t_end);
  const Trajectory b = run_unitary(go, t_end);
  t.add_column("t_q_over_pi", scaled(a.times, q / kPi));
  t.add_column("n_ph_g", series_of(a, "n_ph"));
  t.add_column("n_ph_g_Omega", series_of(b, "n_ph"));
  t.add_column("n_at_g", series_of(a, "n_at"));
  t.add_column("n_at_g_Omega", series_of(b, "n_at"));
  art.plot = {"Atomic excitation, N = 6, coherent field", "t_q_over_pi", {"n_at_g", "n_at_g_Omega"},
              "q t / pi", "<n_at>"};

  FigureRun run;
  run.summary.push_back("figure2: eta factor g " + num(*g.run.eta_factor) + ", g+Omega " + num(*go.run.eta_factor));
  run.summary.push_back("figure2: q(g) = " + num(q) + ", q(g+Omega) closed form = " + num(reference_rate(go)));
  run.artifacts.push_back(std::move(art));
  return run;
}

FigureRun figure3(const FigureOptions& o) {
  ScenarioConfig go = apply(figure2_config(true), o, kFigure2FactorGOmega);
  if (o.no_crt) go.system.with_crt = false;
  go = refined(std::move(go), o);
  const Real q = reference_rate(go);
  const Real t_end = go.run.t_span / q;

  FigureArtifact art;
  art.stem = "figure3";
  Table& t = art.table;
  t.metadata.emplace_back("preset", "figure3");
  t.metadata.emplace_back("time_unit", "q t / pi, q from the combined g and Omega modulation");
  t.metadata.emplace_back("q", num(q));
  describe(t, "", go);

  const Trajectory tr = run_unitary(go, t_end);
  t.add_column("t_q_over_pi", scaled(tr.times, q / kPi));
  for (int n : {2, 3, 4, 5, 6}) t.add_column("p_ph_" + std::to_string(n), series_of(tr, "p_ph:" + std::to_string(n)));
  for (int k : {0, 1, 2, 3}) t.add_column("p_at_" + std::to_string(k), series_of(tr, "p_at:" + std::to_string(k)));
  art.plot = {"Photon and atomic distributions under g and Omega modulation", "t_q_over_pi",
              {"p_ph_2", "p_ph_3", "p_ph_5", "p_at_0", "p_at_2", "p_at_3"}, "q t / pi", "probability"};

  FigureRun run;
  run.summary.push_back("figure3: q = " + num(q) + ", eta factor " + num(*go.run.eta_factor));
  run.artifacts.push_back(std::move(art));
  return run;
}

FigureRun figure4(const FigureOptions& o) {
  ScenarioConfig real = apply(figure4_config(true), o, kFigure4FactorRealistic);
  ScenarioConfig ideal = apply(figure4_config(false), o, kFigure4FactorIdeal);
  if (o.no_crt) real.system.with_crt = ideal.system.with_crt = false;
  real = refined(std::move(real), o);
  ideal = refined(std::move(ideal), o);
  const UnitSystem units;
  const Real t_end = time_scale(real) * real.run.t_span;

  FigureArtifact art;
  art.stem = "figure4";
  Table& t = art.table;
  t.metadata.emplace_back("preset", "figure4");
  t.metadata.emplace_back("time_unit", "microseconds at omega0 / 2 pi = 10 GHz");
  describe(t, "realistic", real);
  describe(t, "ideal", ideal);

  const Scenario rs = make_scenario(real);
  EvolveOptions lo = rs.evolve;
  const Trajectory lossy = evolve_lindblad(rs.hamiltonian(rs.schedules.front().eta), *real.dissipation,
                                           DensityMatrix::pure(rs.initial), {0.0, t_end}, real.run.samples, lo);
  const Trajectory clean = run_unitary(ideal, t_end);

  std::vector<Real> us(lossy.times.size());
  for (std::size_t i = 0; i < us.size(); ++i) us[i] = units.to_microseconds(lossy.times[i]);
  t.add_column("t_us", us);
  t.add_column("n_at_realistic", series_of(lossy, "n_at"));
  t.add_column("n_at_ideal", series_of(clean, "n_at"));
  t.add_column("n_ph_realistic", series_of(lossy, "n_ph"));
  t.add_column("n_ph_ideal", series_of(clean, "n_ph"));
  t.add_column("purity_realistic", lossy.purity);
  art.plot = {"Atomic excitation, two-qubit circuit", "t_us", {"n_at_realistic", "n_at_ideal"}, "t (us)",
              "<n_at>"};

  FigureRun run;
  run.summary.push_back("figure4: realistic factor " + num(*real.run.eta_factor) + ", ideal factor " +
                        num(*ideal.run.eta_factor));
  run.summary.push_back("figure4: final purity " + num(lossy.purity.back()));
  run.artifacts.push_back(std::move(art));
  return run;
}

}  // namespace

ScenarioConfig figure1_config(bool with_crt) {
  ScenarioConfig c;
  c.system.N = 2;
  c.system.g0 = 0.08 / std::sqrt(2.0);
  c.system.Omega0 = 1.0 + 9.0 * 0.08;
  c.system.with_crt = with_crt;
  c.n_max = 10;
  c.schedules = {{Target::g, -1, 0.1 * c.system.g0, 0.0, 0.0}};
  c.initial = {InitialKind::DickeFock, 0, 5, 0.0};
  c.transition = {5, 0};
  c.run.t_span = 2.5 * kPi;
  c.run.unit = TimeUnit::RabiRate;
  c.run.samples = 401;
  c.run.eta_factor = with_crt ? kFigure1FactorCrt : kFigure1FactorTc;
  c.sweep = {1.04, 1.08, 41, true};
  c.outputs.observables = {"n_ph", "n_at", "tracked:0"};
  c.validate();
  return c;
}

ScenarioConfig figure2_config(bool omega_modulation) {
  ScenarioConfig c;
  c.system.N = 6;
  c.system.g0 = 0.08 / std::sqrt(6.0);
  c.system.Omega0 = 1.0 + 9.0 * 0.08;
  c.n_max = 34;
  c.schedules = {{Target::g, -1, 0.1 * c.system.g0, 0.0, 0.0}};
  if (omega_modulation) c.schedules.push_back({Target::Omega, -1, 0.1 * 0.72, 0.0, kPi});
  c.initial = {InitialKind::Coherent, 0, 0, 5.5};
  c.transition = {5, 0};
  c.run.t_span = 2.5 * kPi;
  c.run.unit = TimeUnit::RabiRate;
  c.run.samples = 401;
  c.run.tol = 1e-9;
  c.run.eta_factor = omega_modulation ? kFigure2FactorGOmega : kFigure2FactorG;
  c.sweep = {1.03, 1.045, 161, true};
  c.outputs.observables = {"n_ph", "n_at", "tracked:0"};
  c.validate();
  return c;
}

ScenarioConfig figure4_config(bool realistic) {
  const Real g1 = 0.0566;
  ScenarioConfig c;
  c.system.N = 2;
  c.system.g0 = g1;
  c.system.Omega0 = 1.72;
  c.n_max = 14;
  c.initial = {InitialKind::Coherent, 0, 0, 3.0};
  c.transition = {4, 0};
  c.run.t_span = 1.0;
  c.run.unit = TimeUnit::Microseconds;
  c.run.samples = 401;
  c.run.tol = 1e-8;
  c.outputs.observables = {"n_at", "n_ph"};
  if (realistic) {
    const Real g2 = 1.01 * g1;
    c.basis = BasisKind::Distinguishable;
    c.qubit_Omega = {1.72, 1.0 + 0.72 * 1.02};
    c.qubit_g = {g1, g2};
    c.schedules = {{Target::g, 0, 0.1 * g1, 0.0, 0.0}, {Target::g, 1, 0.1 * g2, 0.0, 0.0}};
    c.dissipation = DissipationRates{5e-5 * g1, {5e-5 * g1, 5e-5 * g2}, {5e-5 * g1, 5e-5 * g2}};
    c.run.eta_factor = kFigure4FactorRealistic;
    c.sweep = {1.04, 1.08, 241, true};
  } else {
    c.schedules = {{Target::g, -1, 0.1 * g1, 0.0, 0.0}};
    c.run.eta_factor = kFigure4FactorIdeal;
    c.sweep = {1.03, 1.07, 241, true};
  }
  c.validate();
  return c;
}

Real eta_from_factor(const ScenarioConfig& config, Real factor) {
  return factor * 2.0 * std::abs(config.system.detuning());
}

std::vector<ModulationSchedule> collective_reference(const std::vector<ModulationSchedule>& schedules) {
  std::vector<ModulationSchedule> out;
  for (const auto& s : schedules) {
    if (s.qubit > 0) continue;
    ModulationSchedule c = s;
    c.qubit = -1;
    out.push_back(c);
  }
  return out;
}

Real reference_rate(const ScenarioConfig& config) {
  return std::abs(two_photon_rate_closed_form(config.transition.n, config.transition.k, config.system,
                                              collective_reference(config.driven_schedules()))
                      .xi);
}

Scenario make_scenario(const ScenarioConfig& config) {
  config.validate();
  std::variant<SystemParams, RealisticParams> params = config.system;
  if (config.basis == BasisKind::Distinguishable) params = config.realistic();
  Scenario s{config.space(), params, config.driven_schedules(), config.initial_state(),
                2, 0, 0.0, EvolveOptions{}};
  require(!s.schedules.empty(), ErrorKind::Configuration, "scenario needs at least one modulation schedule");
  s.target_excitations = config.transition.k + 2;
  s.target_photons = config.transition.n - config.transition.k - 2;
  s.reference_rate = reference_rate(config);
  s.evolve.tol = config.run.tol;
  return s;
}

Real time_scale(const ScenarioConfig& config) {
  switch (config.run.unit) {
    case TimeUnit::Omega0: return 1.0 / config.system.omega0;
    case TimeUnit::RabiRate: {
      const Real q = reference_rate(config);
      require(q > 0.0, ErrorKind::PhysicsGuard, "time unit 1/q needs a non-zero transition rate");
      return 1.0 / q;
    }
    case TimeUnit::Microseconds: return UnitSystem{}.from_microseconds(1.0);
  }
  return 1.0;
}

FigureRun run_figure(int number, const FigureOptions& options) {
  switch (number) {
    case 1: return figure1(options);
    case 2: return figure2(options);
    case 3: return figure3(options);
    case 4: return figure4(options);
    default: fail(ErrorKind::Configuration, "figure presets are numbered 1 to 4");
  }
}

}  // namespace dicke
