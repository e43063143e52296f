#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dicke/config.hpp"
#include "dicke/output.hpp"
#include "dicke/scan.hpp"

namespace dicke {

// Resonance factors eta_r / (2|Delta_-|) that the figure presets drive at.
inline constexpr Real kFigure1FactorCrt = 1.0678;
inline constexpr Real kFigure1FactorTc = 1.0540;
inline constexpr Real kFigure2FactorG = 1.0389;
inline constexpr Real kFigure2FactorGOmega = 1.0388;
inline constexpr Real kFigure4FactorRealistic = 1.0632;
inline constexpr Real kFigure4FactorIdeal = 1.0531;

/// N = 2, g0 sqrt(N) = 0.08, Delta_- = -9 g0 sqrt(N), eps_g = 0.1 g0,
/// initial |0, 5>, transition to |2, 3>.
ScenarioConfig figure1_config(bool with_crt);
/// N = 6, g0 sqrt(N) = 0.08, coherent field |alpha|^2 = 5.5; optionally adds
/// an Omega modulation of depth 0.1 |Delta_-| in antiphase with g.
ScenarioConfig figure2_config(bool omega_modulation);
/// Two-qubit circuit: `realistic` selects distinguishable qubits with 1%
/// spread in g and 2% in Delta plus dissipation; otherwise identical
/// collective qubits without loss.  Coherent field |alpha|^2 = 3, target |ee, 2>.
ScenarioConfig figure4_config(bool realistic);

/// Drive frequency 2|Delta_-| * factor of the reference qubit.
Real eta_from_factor(const ScenarioConfig& config, Real factor);

/// Schedules reduced to one collective entry per target (qubit 0 stands in
/// for the pair), as the closed-form rate expects.
std::vector<ModulationSchedule> collective_reference(const std::vector<ModulationSchedule>& schedules);

/// |Xi| of config.transition from the closed-form expression.
Real reference_rate(const ScenarioConfig& config);

/// Scenario driven at run.eta_factor (or the schedules' own eta when unset).
Scenario make_scenario(const ScenarioConfig& config);

/// Multiplier taking run.t_span to units of 1/omega0.
Real time_scale(const ScenarioConfig& config);

struct FigureOptions {
  std::optional<Real> eta_factor;  // overrides every preset factor
  bool no_crt = false;
  int samples = 0;                 // 0 keeps the preset default
  // Re-locate each resonance near its preset factor (narrow sweep, then
  // Brent on the transfer) instead of driving at the rounded factor.
  bool refine = false;
};

struct FigureArtifact {
  std::string stem;  // file name without extension
  Table table;
  PlotSpec plot;
};

struct FigureRun {
  std::vector<FigureArtifact> artifacts;
  std::vector<std::string> summary;
};

FigureRun run_figure(int number, const FigureOptions& options = {});

}  // namespace dicke
