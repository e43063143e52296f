#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "dicke/hilbert.hpp"

namespace dicke {

/// Frequencies and rates are dimensionless, in units of the bare cavity
/// frequency omega0 (so omega0 == 1 for every preset).
struct SystemParams {
  Real omega0 = 1.0;
  Real Omega0 = 1.0;
  Real g0 = 0.0;
  int N = 1;
  bool with_crt = true;

  Real detuning() const { return omega0 - Omega0; }
  Real dispersive_shift() const { return g0 * g0 / detuning(); }
  /// max_k g0 f_k sqrt(n) / |detuning| over the Dicke ladder.
  Real dispersive_ratio(int n_excitations) const;

  void validate() const;

  friend bool operator==(const SystemParams&, const SystemParams&) = default;
};

/// Two slightly different qubits coupled to one mode, sigma_z zero point.
struct RealisticParams {
  Real omega0 = 1.0;
  std::vector<Real> Omega;
  std::vector<Real> g;
  bool with_crt = true;

  int N() const { return static_cast<int>(Omega.size()); }
  Real detuning(int qubit) const { return omega0 - Omega.at(qubit); }

  friend bool operator==(const RealisticParams&, const RealisticParams&) = default;

  void validate() const;
};

enum class Target { omega, Omega, g };

const char* to_string(Target target);
Target parse_target(const std::string& name);

/// X(t) = X0 + epsilon sin(eta t + phi).  `qubit` selects one qubit of the
/// realistic variant; -1 addresses the collective parameter.
struct ModulationSchedule {
  Target target = Target::g;
  int qubit = -1;
  Real epsilon = 0.0;
  Real eta = 0.0;
  Real phi = 0.0;

  Real offset_at(Real t) const { return epsilon * std::sin(eta * t + phi); }
  Real value_at(Real base, Real t) const { return base + offset_at(t); }

  friend bool operator==(const ModulationSchedule&, const ModulationSchedule&) = default;
};

struct DissipationRates {
  Real kappa = 0.0;
  std::vector<Real> gamma;
  std::vector<Real> gamma_phi;

  bool any() const;
  void validate(int qubits) const;

  friend bool operator==(const DissipationRates&, const DissipationRates&) = default;
};

/// Ratio above which a modulation depth counts as non-perturbative.
inline constexpr Real kPerturbativeWarnRatio = 0.3;

/// Human-readable warnings for modulation depths outside the perturbative
/// regime and for per-qubit phase differences.  Throws on duplicate targets.
std::vector<std::string> check_schedules(const SystemParams& params,
                                         const std::vector<ModulationSchedule>& schedules);
std::vector<std::string> check_schedules(const RealisticParams& params,
                                         const std::vector<ModulationSchedule>& schedules);

struct ModulatedTerm {
  SparseC generator;
  Real epsilon = 0.0;
  Real eta = 0.0;
  Real phi = 0.0;

  Real coefficient(Real t) const { return epsilon * std::sin(eta * t + phi); }
};

/// H(t) = H_const + sum_X epsilon_X sin(eta_X t + phi_X) dH/dX.
struct AffineHamiltonian {
  SpaceSpec space;
  SparseC constant;
  std::vector<ModulatedTerm> terms;

  SparseC at(Real t) const;
  /// y = H(t) x without assembling H(t).
  void apply(Real t, const VectorC& x, VectorC& y) const;
  /// Shared drive frequency when every term uses the same eta.
  std::optional<Real> common_frequency() const;
};

/// Basis indices reachable from `seeds` through nonzero elements of the
/// static part or any modulated generator, sorted.  H(t) maps the span of
/// these indices into itself for every t.
std::vector<int> coupled_subspace(const AffineHamiltonian& h, const std::vector<int>& seeds);

/// Same Hamiltonian restricted to the rows and columns in `indices`.  The
/// `space` member is kept, so only the matrices shrink.
AffineHamiltonian restrict_to(const AffineHamiltonian& h, const std::vector<int>& indices);

/// Coupling generator dH/dg of the Dicke form (with or without the
/// counter-rotating part).
SparseC coupling_operator(const OperatorSet& ops, bool with_crt);
/// Coupling generator of one qubit in the distinguishable basis.
SparseC qubit_coupling_operator(const OperatorSet& ops, int qubit, bool with_crt);

/// Dicke-form Hamiltonian (ground energy 0 at g = 0).  Works on both the
/// collective and the distinguishable basis of identical qubits.
SparseC hamiltonian_static(const SpaceSpec& space, const SystemParams& params);

AffineHamiltonian hamiltonian_affine(const SpaceSpec& space, const SystemParams& params,
                                     const std::vector<ModulationSchedule>& schedules);

SparseC hamiltonian_at(const SpaceSpec& space, const SystemParams& params,
                       const std::vector<ModulationSchedule>& schedules, Real t);

/// Per-qubit Hamiltonian in the sigma_z convention:
/// omega n + sum_l [Omega_l sigma_z/2 + g_l (a + a^dag)(sigma_+ + sigma_-)].
/// Restricted to two qubits.
AffineHamiltonian realistic_affine(const SpaceSpec& space, const RealisticParams& params,
                                   const std::vector<ModulationSchedule>& schedules);

SparseC hamiltonian_realistic_at(const SpaceSpec& space, const RealisticParams& params,
                                 const std::vector<ModulationSchedule>& schedules, Real t);

/// Physical unit conversions, default omega0 / 2 pi = 10 GHz.
struct UnitSystem {
  Real omega0_over_2pi_hz = 10e9;

  Real to_microseconds(Real t_dimensionless) const;
  Real from_microseconds(Real t_us) const;
};

Real max_abs(const SparseC& m);
Real hermiticity_defect(const SparseC& m);

}  // namespace dicke
