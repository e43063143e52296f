#pragma once

#include <string>
#include <utility>
#include <vector>

#include "dicke/hilbert.hpp"
#include "dicke/integrator.hpp"
#include "dicke/model.hpp"

namespace dicke {

class DensityMatrix {
 public:
  DensityMatrix(SpaceSpec space, MatrixC matrix);
  static DensityMatrix pure(const StateVector& psi);

  const SpaceSpec& space() const { return space_; }
  const MatrixC& matrix() const { return matrix_; }

  Real trace() const { return matrix_.trace().real(); }
  Real purity() const;
  Real hermiticity_defect() const;
  Real min_eigenvalue() const;

 private:
  SpaceSpec space_;
  MatrixC matrix_;
};

/// D[O] rho = O rho O^dag - (O^dag O rho + rho O^dag O) / 2.
/// `O` may be sparse or dense.
template <class Op>
MatrixC lindblad_dissipator(const Op& O, const MatrixC& rho) {
  require(O.rows() == O.cols() && O.rows() == rho.rows() && rho.rows() == rho.cols(),
          ErrorKind::Domain, "dissipator operator and density matrix dimensions differ");
  const MatrixC o_rho = O * rho;
  const MatrixC od_o = MatrixC(O.adjoint()) * MatrixC(O);
  MatrixC out = o_rho * O.adjoint();
  out -= 0.5 * (od_o * rho + rho * od_o);
  return out;
}

/// Propagation frame.  Interaction: states are carried relative to the
/// diagonal of the static Hamiltonian, ψ_lab = exp(-i E t) ψ̃, which is an
/// exact change of variables that leaves populations unchanged.
enum class Frame { Lab, Interaction };

struct EvolveOptions {
  Real tol = 1e-10;
  Frame frame = Frame::Interaction;
  // Run fails when |norm - 1| (or |trace - 1|) exceeds this at a sample.
  Real drift_limit = 1e-7;
  // Population allowed in the top Fock level before a cutoff warning.
  Real cutoff_limit = 1e-6;
  bool cutoff_is_error = false;
  // Lindblad: most negative eigenvalue tolerated at a sample.
  Real negativity_limit = 1e-6;
  bool store_states = false;
  // Bare basis indices whose populations are recorded at every sample.
  std::vector<int> tracked;
  long max_steps = 200'000'000;
};

struct TrajectoryStats {
  long steps = 0;
  long rejected = 0;
  long rhs_evals = 0;
  Real max_norm_drift = 0.0;
  Real max_cutoff_population = 0.0;
  Real min_eigenvalue = 0.0;
  Real max_hermiticity_defect = 0.0;
  // One-period propagator unitarity defect (stroboscopic runs only).
  Real unitarity_defect = 0.0;
  std::vector<std::string> warnings;
};

struct Trajectory {
  SpaceSpec space;
  std::vector<Real> times;
  std::vector<ObservableSet> observables;
  std::vector<std::vector<Real>> tracked;  // [sample][tracked index]
  std::vector<Real> purity;                // Lindblad runs only
  std::vector<VectorC> states;
  std::vector<MatrixC> density_matrices;
  std::vector<std::pair<std::string, std::string>> metadata;
  TrajectoryStats stats;

  std::vector<Real> series(const std::string& selector) const;
};

/// Schrödinger evolution i dψ/dt = H(t) ψ sampled on `sample_count`
/// uniformly spaced times spanning [t0, t1] (inclusive).
Trajectory evolve_schrodinger(const AffineHamiltonian& h, const StateVector& psi0,
                              std::pair<Real, Real> t_span, int sample_count,
                              const EvolveOptions& opts = {});

Trajectory evolve_schrodinger(const SpaceSpec& space, const SystemParams& params,
                              const std::vector<ModulationSchedule>& schedules,
                              const StateVector& psi0, std::pair<Real, Real> t_span,
                              int sample_count, const EvolveOptions& opts = {});

/// One-period propagator of a periodic H(t) (lab frame, t0 = 0), replaced
/// by its nearest unitary matrix.  `unitarity_defect` is measured before
/// that projection and bounds the per-period integration error.
struct FloquetPropagator {
  Real period = 0.0;
  MatrixC U;
  // Basis indices spanned by U; empty for the full space.
  std::vector<int> subspace;
  Real unitarity_defect = 0.0;
  StepperStats stats;
};

FloquetPropagator floquet_propagator(const AffineHamiltonian& h, const EvolveOptions& opts = {});

/// Block of the one-period propagator on an invariant subspace (see
/// coupled_subspace); U is indexed by position within `subspace`.
FloquetPropagator floquet_propagator(const AffineHamiltonian& h, const std::vector<int>& subspace,
                                     const EvolveOptions& opts = {});

/// Stroboscopic evolution for periodic drives: ψ(j s T) = U_T^{j s} ψ0,
/// sampled every `stride` periods up to `periods` periods.
Trajectory evolve_stroboscopic(const AffineHamiltonian& h, const StateVector& psi0,
                               long periods, long stride, const EvolveOptions& opts = {});

Trajectory evolve_stroboscopic(const FloquetPropagator& floquet, const StateVector& psi0,
                               long periods, long stride, const EvolveOptions& opts = {});

/// Jump operators with their rates: kappa D[a], gamma_l D[sigma_-^(l)],
/// (gamma_phi_l / 2) D[sigma_z^(l)].
/// Samples on a uniform grid like evolve_schrodinger, but reaches each
/// sample through powers of the one-period propagator plus a direct
/// integration over the remaining fraction of a period.  Only one full
/// period is ever integrated; whole periods cost one matrix-vector product.
Trajectory evolve_floquet_sampled(const AffineHamiltonian& h, const StateVector& psi0,
                                  std::pair<Real, Real> t_span, int sample_count,
                                  const EvolveOptions& opts = {});

std::vector<std::pair<Real, SparseC>> jump_operators(const OperatorSet& ops,
                                                     const DissipationRates& rates);

/// dρ/dt = -i[H(t), ρ] + dissipators, with ρ ← (ρ + ρ^dag)/2 after each step.
Trajectory evolve_lindblad(const AffineHamiltonian& h, const DissipationRates& rates,
                           const DensityMatrix& rho0, std::pair<Real, Real> t_span,
                           int sample_count, const EvolveOptions& opts = {});

Trajectory evolve_lindblad(const SpaceSpec& space, const RealisticParams& params,
                           const std::vector<ModulationSchedule>& schedules,
                           const DissipationRates& rates, const DensityMatrix& rho0,
                           std::pair<Real, Real> t_span, int sample_count,
                           const EvolveOptions& opts = {});

}  // namespace dicke
