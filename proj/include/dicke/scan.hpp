#pragma once

#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "dicke/dynamics.hpp"
#include "dicke/hilbert.hpp"
#include "dicke/model.hpp"

namespace dicke {

/// A modulated model together with an initial state and the bare target
/// level |k_target, n_target> whose population measures the transfer.
///
/// The drive frequency stored in `schedules` is a placeholder: sweeps and
/// `hamiltonian(eta)` overwrite it on every schedule.
struct Scenario {
  SpaceSpec space;
  std::variant<SystemParams, RealisticParams> params;
  std::vector<ModulationSchedule> schedules;
  StateVector initial;
  int target_excitations = 2;
  int target_photons = 0;
  // |Xi| of the target transition, sets the default sweep horizon.
  Real reference_rate = 0.0;
  EvolveOptions evolve;

  AffineHamiltonian hamiltonian(Real eta) const;

  // Basis indices carrying the target level (one per qubit configuration
  // with the right excitation count in the distinguishable basis).
  std::vector<int> target_indices() const;
  Real target_population(const VectorC& psi) const;
};

struct SweepOptions {
  int grid_points = 41;
  bool zoom = true;
  // Evolution time per grid point; 0 selects 1.2 pi / reference_rate.
  Real horizon = 0.0;
  // 0 selects the hardware concurrency.
  unsigned threads = 0;
  Real background_factor = 5.0;
};

struct SweepResult {
  std::vector<Real> etas;
  std::vector<Real> transfer;
  Real peak_eta = 0.0;
  Real peak_width = 0.0;
  Real peak_transfer = 0.0;
  Real background = 0.0;
  Real grid_spacing = 0.0;
  // Coarse pass, kept when the zoom refines it.
  std::vector<Real> coarse_etas;
  std::vector<Real> coarse_transfer;
  Real coarse_peak_eta = 0.0;
  Real coarse_spacing = 0.0;
  // Rms misfit of the three-point parabola through neighbouring samples
  // (zero for exactly three points, reported for the five-point window).
  Real quadratic_residual = 0.0;
  Real horizon = 0.0;
  Real max_unitarity_defect = 0.0;
};

/// Maximum target population reached at stroboscopic times j T within the
/// horizon, for a single drive frequency.
Real max_transfer(const Scenario& scenario, Real eta, Real horizon,
                  Real* unitarity_defect = nullptr);

/// Scans eta over `eta_range`, records the maximum transfer per point and
/// locates the peak by a parabola through the three largest neighbouring
/// samples.  Throws Bracket when the maximum sits on the grid edge and
/// NoResonance when the peak does not clear the median background by
/// `background_factor`.
SweepResult sweep_resonance(const Scenario& scenario, std::pair<Real, Real> eta_range,
                            const SweepOptions& options = {});

/// Drive frequency of maximal transfer near a located peak, from a
/// bounded Brent search over peak_eta +- 2 grid spacings.  Sweep grids only
/// pin the peak to a fraction of their spacing; rate fits need it pinned
/// well inside the line width.
Real refine_resonance(const Scenario& scenario, const SweepResult& sweep);

struct RabiFitOptions {
  // Moving-average window (time units) applied before fitting; removes
  // fast dressing ripple without shifting the fitted frequency.  Needs
  // uniformly spaced samples.  0 disables.
  Real smoothing = 0.0;
};

struct RabiFit {
  // |Xi|: the population oscillates as cos(2 rate t + theta).
  Real rate = 0.0;
  Real amplitude = 0.0;
  Real phase = 0.0;
  Real offset = 0.0;
  Real residual_rms = 0.0;
  // Misfit of the same model against the unsmoothed samples.
  Real raw_residual_rms = 0.0;
  Real seed_rate = 0.0;
  int samples = 0;
};

/// Least-squares fit of A cos(2 q t + theta) + C.  The frequency is seeded
/// from the strongest bin of a discrete spectrum and refined with the
/// linear parameters projected out.  Throws FitRejected when the residual
/// reaches a tenth of the amplitude or the data cover fewer than 1.5
/// oscillation periods.
RabiFit fit_rabi(const std::vector<Real>& times, const std::vector<Real>& values,
                 const RabiFitOptions& options = {});
RabiFit fit_rabi(const Trajectory& trajectory, const std::string& selector,
                 const RabiFitOptions& options = {});

/// Stroboscopic trajectory of the scenario at drive frequency eta, sampled
/// every `stride` periods up to `t_end`.
Trajectory evolve_scenario(const Scenario& scenario, Real eta, Real t_end, long stride);

}  // namespace dicke
