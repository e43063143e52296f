#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dicke/hilbert.hpp"
#include "dicke/model.hpp"

namespace dicke {

enum class InitialKind { DickeFock, Coherent };

struct InitialStateSpec {
  InitialKind kind = InitialKind::DickeFock;
  int k = 0;
  int n = 0;                  // Dicke-Fock photon number
  Real alpha_squared = 0.0;   // coherent mean photon number

  friend bool operator==(const InitialStateSpec&, const InitialStateSpec&) = default;
};

enum class TimeUnit { Omega0, RabiRate, Microseconds };

const char* to_string(TimeUnit unit);
TimeUnit parse_time_unit(const std::string& name);

struct RunSpec {
  Real t_span = 0.0;  // in `unit`
  TimeUnit unit = TimeUnit::Omega0;
  int samples = 201;
  Real tol = 1e-10;
  // When set, every schedule is driven at factor * 2|Delta_-|.
  std::optional<Real> eta_factor;

  friend bool operator==(const RunSpec&, const RunSpec&) = default;
};

// Transition |k, n-k> -> |k+2, n-k-2> used by rates, sweeps and q-units.
struct TransitionSpec {
  int n = 5;
  int k = 0;

  friend bool operator==(const TransitionSpec&, const TransitionSpec&) = default;
};

struct SweepSpec {
  Real factor_lo = 1.0;
  Real factor_hi = 1.1;
  int points = 41;
  bool zoom = true;

  friend bool operator==(const SweepSpec&, const SweepSpec&) = default;
};

struct OutputSpec {
  std::vector<std::string> observables{"n_ph", "n_at"};
  bool svg = false;

  friend bool operator==(const OutputSpec&, const OutputSpec&) = default;
};

/// Everything a command needs to build and run one scenario.
///
/// A config with `basis = distinguishable` takes per-qubit frequencies and
/// couplings from `qubit_Omega` / `qubit_g`; `system` still supplies omega0,
/// N, the CRT switch and the reference parameters for dispersive estimates.
struct ScenarioConfig {
  SystemParams system;
  int n_max = 20;
  BasisKind basis = BasisKind::Collective;
  std::vector<Real> qubit_Omega;
  std::vector<Real> qubit_g;
  std::vector<ModulationSchedule> schedules;
  std::optional<DissipationRates> dissipation;
  InitialStateSpec initial;
  TransitionSpec transition;
  RunSpec run;
  SweepSpec sweep;
  OutputSpec outputs;

  SpaceSpec space() const;
  RealisticParams realistic() const;
  StateVector initial_state() const;
  // Schedules with run.eta_factor applied (unchanged when unset).
  std::vector<ModulationSchedule> driven_schedules() const;
  // Re-runs every physics guard of the referenced parameter types.
  void validate() const;

  friend bool operator==(const ScenarioConfig&, const ScenarioConfig&) = default;
};

/// Parses `section.key = value` lines; '#' starts a comment.  Errors carry
/// `origin:line:column` and ErrorKind::Configuration.  Without an explicit
/// system.n_max a coherent initial state gets default_fock_cutoff.
ScenarioConfig parse_config(const std::string& text, const std::string& origin = "<string>");
ScenarioConfig load_config(const std::string& path);

/// Text that parse_config maps back to an identical config.
std::string emit_config(const ScenarioConfig& config);

}  // namespace dicke
