#pragma once

#include <utility>
#include <vector>

#include "dicke/hilbert.hpp"
#include "dicke/model.hpp"

namespace dicke {

enum class SpectrumSource { ExactDiagonalization, SecondOrderPerturbation };

/// Dressed label: total excitation number m and intra-subspace label S,
/// which is the Dicke index k of the dominant bare state |k, m - k>.
struct DressedLabel {
  int m = 0;
  int S = 0;
  friend bool operator==(const DressedLabel&, const DressedLabel&) = default;
};

struct DressedEntry {
  DressedLabel label;
  Real lambda = 0.0;
  Real nu = 0.0;
  // |<k, m-k | phi>|^2 for the labelling bare state.
  Real overlap = 1.0;
  StateVector state;

  Real lambda_tilde() const { return lambda + nu; }
};

struct DressedSpectrum {
  SpaceSpec space;
  SystemParams params;
  SpectrumSource source = SpectrumSource::ExactDiagonalization;
  bool with_crt = false;
  bool has_crt_shifts = false;
  std::vector<DressedEntry> entries;

  const DressedEntry* find(DressedLabel label) const;
  const DressedEntry& at(DressedLabel label) const;
  std::vector<int> labels(int m) const;
  int max_m() const;
};

/// Second-order eigenfrequency of the dressed state |phi_{n,k}>.
Real lambda_perturbative(int n, int k, const SystemParams& params);

/// Second-order dressed state, normalized, leading amplitude positive.
StateVector dressed_state_perturbative(const SpaceSpec& space, int n, int k,
                                       const SystemParams& params);

/// Labelled spectrum of the static Hamiltonian.  Without counter-rotating
/// terms every excitation subspace m <= n_max is diagonalized separately;
/// with them the full matrix is diagonalized and m is read off the
/// dominant bare component.
DressedSpectrum spectrum_exact(const SpaceSpec& space, const SystemParams& params);

DressedSpectrum spectrum_perturbative(const SpaceSpec& space, const SystemParams& params);

/// Second-order counter-rotating shift nu_{m,T} of a rotating-wave
/// spectrum.  Needs subspace m + 2 inside the spectrum.
Real crt_shift(int m, int T, const DressedSpectrum& spectrum_tc, const SystemParams& params);

/// Largest g0 |sum_k f_k Lambda| over the couplings entering nu_{m,T},
/// divided by omega0 - |detuning| (should stay below about 1).
Real crt_validity_ratio(int m, int T, const DressedSpectrum& spectrum_tc,
                        const SystemParams& params);

/// Copy of a rotating-wave spectrum with nu filled in for every subspace
/// whose m + 2 partner is available; higher subspaces are dropped.
DressedSpectrum with_crt_shifts(const DressedSpectrum& spectrum_tc);

/// Modulation coefficient Upsilon^{L,k}_{m,T,S}.
Complex upsilon(Target target, int k, int m, int T, int S, const DressedSpectrum& spectrum,
                const std::vector<ModulationSchedule>& schedules);

struct TransitionRate {
  int n = 0;
  int from_label = 0;
  int to_label = 0;
  Complex xi{0.0, 0.0};
  Real eta_res = 0.0;
};

TransitionRate transition_rate_general(int n, int T, int S, const DressedSpectrum& spectrum,
                                       const std::vector<ModulationSchedule>& schedules);

/// Lowest-order rate of |phi_{n,k}> <-> |phi_{n,k+2}>.  Zero when k + 2 > N
/// or fewer than two photons are available.
TransitionRate two_photon_rate_closed_form(int n, int k, const SystemParams& params,
                                           const std::vector<ModulationSchedule>& schedules);

Real eta_resonant(int n, int k, const SystemParams& params);

Real phase_Phi(int m, int S, Real t, const DressedSpectrum& spectrum,
               const std::vector<ModulationSchedule>& schedules);

/// All slow-amplitude couplings inside one excitation subspace.
struct SubspaceCoupling {
  int n = 0;
  std::vector<int> labels;
  std::vector<Real> lambda_tilde;
  MatrixC xi;  // xi(T, S), zero diagonal
  // Phase data: sum_k Upsilon^{L,k}_{S,S} per label and schedule.
  MatrixR diagonal_upsilon;
  std::vector<Real> schedule_phases;
};

SubspaceCoupling subspace_coupling(int n, const DressedSpectrum& spectrum,
                                   const std::vector<ModulationSchedule>& schedules,
                                   std::vector<int> labels = {});

struct EffectiveState {
  std::vector<DressedLabel> labels;
  VectorC b;
  VectorR Phi;
  Real t = 0.0;
};

/// b_{m,S} = <phi_{m,S}|psi> over the requested labels (all when empty).
EffectiveState project_onto_dressed(const StateVector& psi, const DressedSpectrum& spectrum,
                                    std::vector<DressedLabel> labels = {});

/// Integrates the slow amplitudes of one subspace over `t_grid` at drive
/// frequency `eta`.  b0 must carry exactly the labels of `coupling`.
std::vector<EffectiveState> evolve_effective(const EffectiveState& b0,
                                             const SubspaceCoupling& coupling, Real eta,
                                             const std::vector<Real>& t_grid,
                                             Real tol = 1e-10);

/// Resonant two-level solution (b_T(t), b_S(t)).
std::pair<Complex, Complex> rwa_solution(Complex b_T0, Complex b_S0, Complex xi, Real t);

/// |psi> = sum exp(i Phi) exp(-i t lambda~) b |phi>, normalized.
StateVector reconstruct_state(const EffectiveState& state, const DressedSpectrum& spectrum);

}  // namespace dicke
