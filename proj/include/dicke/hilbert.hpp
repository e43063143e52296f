#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "dicke/errors.hpp"

namespace dicke {

using Real = double;
using Complex = std::complex<Real>;
using VectorC = Eigen::Matrix<Complex, Eigen::Dynamic, 1>;
using VectorR = Eigen::Matrix<Real, Eigen::Dynamic, 1>;
using MatrixC = Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic>;
using MatrixR = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic>;
using SparseC = Eigen::SparseMatrix<Complex, Eigen::RowMajor>;

enum class BasisKind { Collective, Distinguishable };

/// Truncated atom-field Hilbert space.
///
/// Collective: atomic Dicke states |k>, k = 0..N.  Distinguishable: qubit
/// configurations encoded as a bitmask, bit l set when qubit l is excited.
/// In both cases the photon number varies fastest:
/// index = atomic_index * (n_max + 1) + n_photon.
struct SpaceSpec {
  int N = 1;
  int n_max = 0;
  BasisKind basis = BasisKind::Collective;

  SpaceSpec() = default;
  SpaceSpec(int qubits, int fock_cutoff, BasisKind kind = BasisKind::Collective);

  int atomic_dim() const;
  int fock_dim() const { return n_max + 1; }
  int dim() const { return atomic_dim() * fock_dim(); }

  int index(int atomic, int n_photon) const;
  int atomic_of(int index) const { return index / fock_dim(); }
  int photon_of(int index) const { return index % fock_dim(); }
  // Number of atomic excitations carried by an atomic index.
  int excitations_of_atomic(int atomic) const;

  friend bool operator==(const SpaceSpec&, const SpaceSpec&) = default;
};

class StateVector {
 public:
  StateVector(SpaceSpec space, VectorC amplitudes);

  const SpaceSpec& space() const { return space_; }
  const VectorC& amplitudes() const { return amplitudes_; }
  Complex operator[](int i) const { return amplitudes_[i]; }
  Real norm() const { return amplitudes_.norm(); }

  // Rescales to unit norm; refuses the zero vector.
  StateVector normalized() const;

 private:
  SpaceSpec space_;
  VectorC amplitudes_;
};

struct ObservableSet {
  Real n_ph = 0.0;
  Real n_at = 0.0;
  std::vector<Real> p_ph;
  std::vector<Real> p_at;
};

/// Collective ladder coefficient sqrt((k+1)(N-k)).
Real f_coefficient(int k, int N);

StateVector dicke_fock_state(const SpaceSpec& space, int k, int n_photon);

/// Atoms in Dicke state |k_atom>, field in the coherent state |alpha>
/// truncated at n_max and renormalized.  Throws a cutoff error when
/// |alpha|^2 > n_max / 2.
StateVector coherent_state(const SpaceSpec& space, Complex alpha, int k_atom);

/// Probability mass of the untruncated Poisson distribution above n_max.
Real coherent_tail_mass(Real mean_photons, int n_max);

/// Smallest cutoff satisfying ceil(|a|^2 + 8|a| + 10), floored at 20.
int default_fock_cutoff(Real alpha_squared);

/// Photon-number and excitation-number populations of a pure state.
/// `norm_tolerance` bounds | <psi|psi> - 1 |.
ObservableSet observables(const StateVector& state, Real norm_tolerance = 1e-6);

/// Same marginals computed from a density matrix diagonal.
ObservableSet observables(const SpaceSpec& space, const MatrixC& rho,
                          Real trace_tolerance = 1e-6);

/// Population vector over basis indices for pure or mixed states.
VectorR populations(const VectorC& psi);
VectorR populations(const MatrixC& rho);

ObservableSet observables_from_populations(const SpaceSpec& space, const VectorR& pops);

/// Sparse operator set on a space.  Collective spaces fill `sigma`, the
/// Dicke transition operators sigma[k][j] = |k><j|.  Distinguishable spaces
/// fill the per-qubit sigma_plus, sigma_minus and sigma_z.
struct OperatorSet {
  SpaceSpec space;
  SparseC a;
  SparseC a_dag;
  SparseC n;
  SparseC identity;
  // Total atomic excitation number: sum_k k sigma_kk or sum_l popcount.
  SparseC excitations;
  std::vector<std::vector<SparseC>> sigma;
  std::vector<SparseC> sigma_plus;
  std::vector<SparseC> sigma_minus;
  std::vector<SparseC> sigma_z;
};

OperatorSet build_operators(const SpaceSpec& space);

/// Maps a collective-basis state of identical qubits onto the
/// distinguishable basis using symmetric Dicke superpositions.
StateVector embed_in_distinguishable(const StateVector& collective);

/// Sparse isometry columns = Dicke states expressed in the bitmask basis.
SparseC collective_to_distinguishable(int N, int n_max);

SparseC kron(const SparseC& atomic, const SparseC& field);

}  // namespace dicke
