#include "dicke/hilbert.hpp"

#include <bit>
#include <cmath>
#include <sstream>

namespace dicke {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Domain: return "domain";
    case ErrorKind::Cutoff: return "cutoff";
    case ErrorKind::Normalization: return "normalization";
    case ErrorKind::Configuration: return "configuration";
    case ErrorKind::Unsupported: return "unsupported";
    case ErrorKind::Labeling: return "labeling";
    case ErrorKind::Degeneracy: return "degeneracy";
    case ErrorKind::PhysicsGuard: return "physics-guard";
    case ErrorKind::Numeric: return "numeric";
    case ErrorKind::Bracket: return "bracket";
    case ErrorKind::NoResonance: return "no-resonance";
    case ErrorKind::FitRejected: return "fit-rejected";
  }
  return "unknown";
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Configuration: return 2;
    case ErrorKind::Numeric:
    case ErrorKind::FitRejected: return 4;
    case ErrorKind::Bracket:
    case ErrorKind::NoResonance: return 5;
    default: return 3;
  }
}

SpaceSpec::SpaceSpec(int qubits, int fock_cutoff, BasisKind kind)
    : N(qubits), n_max(fock_cutoff), basis(kind) {
  require(N >= 1, ErrorKind::Domain, "qubit count must be >= 1");
  require(n_max >= 0, ErrorKind::Domain, "Fock cutoff must be >= 0");
  if (basis == BasisKind::Distinguishable)
    require(N <= 20, ErrorKind::Domain, "distinguishable basis limited to N <= 20");
}

int SpaceSpec::atomic_dim() const {
  return basis == BasisKind::Collective ? N + 1 : (1 << N);
}

int SpaceSpec::index(int atomic, int n_photon) const {
  require(atomic >= 0 && atomic < atomic_dim(), ErrorKind::Domain, "atomic index out of range");
  require(n_photon >= 0 && n_photon <= n_max, ErrorKind::Domain, "photon number out of range");
  return atomic * fock_dim() + n_photon;
}

int SpaceSpec::excitations_of_atomic(int atomic) const {
  return basis == BasisKind::Collective ? atomic
                                        : std::popcount(static_cast<unsigned>(atomic));
}

StateVector::StateVector(SpaceSpec space, VectorC amplitudes)
    : space_(space), amplitudes_(std::move(amplitudes)) {
  require(amplitudes_.size() == space_.dim(), ErrorKind::Domain,
          "amplitude vector length does not match the space dimension");
}

StateVector StateVector::normalized() const {
  const Real nrm = amplitudes_.norm();
  require(nrm > 0.0, ErrorKind::Normalization, "cannot normalize the zero vector");
  return StateVector(space_, amplitudes_ / nrm);
}

Real f_coefficient(int k, int N) {
  require(k >= 0 && k <= N, ErrorKind::Domain, "Dicke index k out of range [0, N]");
  return std::sqrt(static_cast<Real>(k + 1) * static_cast<Real>(N - k));
}

namespace {

Real log_binomial(int n, int k) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

// Writes the Dicke state |k> with field amplitudes `field` into `out`.
void fill_product(const SpaceSpec& space, int k, const VectorC& field, VectorC& out) {
  out.setZero(space.dim());
  if (space.basis == BasisKind::Collective) {
    for (int n = 0; n <= space.n_max; ++n) out[space.index(k, n)] = field[n];
    return;
  }
  const Real weight = std::exp(-0.5 * log_binomial(space.N, k));
  for (int mask = 0; mask < space.atomic_dim(); ++mask) {
    if (std::popcount(static_cast<unsigned>(mask)) != k) continue;
    for (int n = 0; n <= space.n_max; ++n) out[space.index(mask, n)] = weight * field[n];
  }
}

}  // namespace

StateVector dicke_fock_state(const SpaceSpec& space, int k, int n_photon) {
  require(k >= 0 && k <= space.N, ErrorKind::Domain, "Dicke index k out of range");
  require(n_photon >= 0 && n_photon <= space.n_max, ErrorKind::Domain,
          "photon number exceeds the Fock cutoff");
  VectorC field = VectorC::Zero(space.fock_dim());
  field[n_photon] = 1.0;
  VectorC amps;
  fill_product(space, k, field, amps);
  return StateVector(space, std::move(amps));
}

int default_fock_cutoff(Real alpha_squared) {
  const Real a = std::sqrt(alpha_squared);
  const int n = static_cast<int>(std::ceil(alpha_squared + 8.0 * a + 10.0));
  return std::max(n, 20);
}

Real coherent_tail_mass(Real mean_photons, int n_max) {
  // 1 - sum_{n<=n_max} Poisson(n); summed from the top for accuracy.
  Real head = 0.0;
  Real term = std::exp(-mean_photons);
  for (int n = 0; n <= n_max; ++n) {
    head += term;
    term *= mean_photons / (n + 1);
  }
  Real tail = 0.0;
  for (int n = n_max + 1; n < n_max + 2000; ++n) {
    tail += term;
    if (term < 1e-300) break;
    term *= mean_photons / (n + 1);
  }
  return tail > 0.0 ? tail : std::max(0.0, 1.0 - head);
}

StateVector coherent_state(const SpaceSpec& space, Complex alpha, int k_atom) {
  const Real mean = std::norm(alpha);
  if (mean > 0.5 * space.n_max) {
    std::ostringstream os;
    os << "coherent state with |alpha|^2 = " << mean << " needs n_max >= "
       << static_cast<int>(std::ceil(2.0 * mean)) << " (recommended "
       << default_fock_cutoff(mean) << "), got " << space.n_max;
    fail(ErrorKind::Cutoff, os.str());
  }
  VectorC field(space.fock_dim());
  // alpha^n / sqrt(n!) built recursively to avoid overflow.
  Complex c = 1.0;
  for (int n = 0; n <= space.n_max; ++n) {
    field[n] = c;
    c *= alpha / std::sqrt(static_cast<Real>(n + 1));
  }
  field /= field.norm();
  VectorC amps;
  fill_product(space, k_atom, field, amps);
  return StateVector(space, std::move(amps));
}

VectorR populations(const VectorC& psi) { return psi.cwiseAbs2(); }

VectorR populations(const MatrixC& rho) { return rho.diagonal().real(); }

ObservableSet observables_from_populations(const SpaceSpec& space, const VectorR& pops) {
  ObservableSet obs;
  obs.p_ph.assign(space.fock_dim(), 0.0);
  obs.p_at.assign(space.N + 1, 0.0);
  for (int i = 0; i < space.dim(); ++i) {
    const int m = space.excitations_of_atomic(space.atomic_of(i));
    obs.p_ph[space.photon_of(i)] += pops[i];
    obs.p_at[m] += pops[i];
  }
  for (int n = 0; n < space.fock_dim(); ++n) obs.n_ph += n * obs.p_ph[n];
  for (int m = 0; m <= space.N; ++m) obs.n_at += m * obs.p_at[m];
  return obs;
}

ObservableSet observables(const StateVector& state, Real norm_tolerance) {
  const Real nrm2 = state.amplitudes().squaredNorm();
  if (std::abs(nrm2 - 1.0) > norm_tolerance) {
    std::ostringstream os;
    os << "state norm^2 = " << nrm2 << " deviates from 1 by more than " << norm_tolerance;
    fail(ErrorKind::Normalization, os.str());
  }
  return observables_from_populations(state.space(), populations(state.amplitudes()));
}

ObservableSet observables(const SpaceSpec& space, const MatrixC& rho, Real trace_tolerance) {
  require(rho.rows() == space.dim() && rho.cols() == space.dim(), ErrorKind::Domain,
          "density matrix dimension does not match the space");
  const Real tr = rho.trace().real();
  if (std::abs(tr - 1.0) > trace_tolerance) {
    std::ostringstream os;
    os << "density matrix trace = " << tr << " deviates from 1";
    fail(ErrorKind::Normalization, os.str());
  }
  return observables_from_populations(space, populations(rho));
}

SparseC kron(const SparseC& atomic, const SparseC& field) {
  SparseC out(atomic.rows() * field.rows(), atomic.cols() * field.cols());
  std::vector<Eigen::Triplet<Complex>> trips;
  trips.reserve(static_cast<size_t>(atomic.nonZeros() * field.nonZeros()));
  for (int r = 0; r < atomic.outerSize(); ++r)
    for (SparseC::InnerIterator ia(atomic, r); ia; ++ia)
      for (int s = 0; s < field.outerSize(); ++s)
        for (SparseC::InnerIterator ib(field, s); ib; ++ib)
          trips.emplace_back(ia.row() * field.rows() + ib.row(),
                             ia.col() * field.cols() + ib.col(), ia.value() * ib.value());
  out.setFromTriplets(trips.begin(), trips.end());
  return out;
}

namespace {

SparseC sparse_identity(int n) {
  SparseC id(n, n);
  id.setIdentity();
  return id;
}

SparseC single_entry(int n, int r, int c) {
  SparseC m(n, n);
  m.insert(r, c) = 1.0;
  m.makeCompressed();
  return m;
}

}  // namespace

OperatorSet build_operators(const SpaceSpec& space) {
  OperatorSet ops;
  ops.space = space;
  const int df = space.fock_dim();
  const int da = space.atomic_dim();

  SparseC a_field(df, df);
  std::vector<Eigen::Triplet<Complex>> trips;
  for (int n = 1; n < df; ++n) trips.emplace_back(n - 1, n, std::sqrt(static_cast<Real>(n)));
  a_field.setFromTriplets(trips.begin(), trips.end());

  const SparseC id_atom = sparse_identity(da);
  const SparseC id_field = sparse_identity(df);
  ops.a = kron(id_atom, a_field);
  ops.a_dag = SparseC(ops.a.adjoint());
  ops.n = ops.a_dag * ops.a;
  ops.identity = sparse_identity(space.dim());

  SparseC exc_atom(da, da);
  for (int i = 0; i < da; ++i) {
    const int m = space.excitations_of_atomic(i);
    if (m != 0) exc_atom.insert(i, i) = static_cast<Real>(m);
  }
  exc_atom.makeCompressed();
  ops.excitations = kron(exc_atom, id_field);

  if (space.basis == BasisKind::Collective) {
    ops.sigma.assign(da, std::vector<SparseC>(da));
    for (int k = 0; k < da; ++k)
      for (int j = 0; j < da; ++j) ops.sigma[k][j] = kron(single_entry(da, k, j), id_field);
  } else {
    for (int l = 0; l < space.N; ++l) {
      SparseC plus(da, da), z(da, da);
      const int bit = 1 << l;
      for (int mask = 0; mask < da; ++mask) {
        if (mask & bit) {
          z.insert(mask, mask) = 1.0;
        } else {
          z.insert(mask, mask) = -1.0;
          plus.insert(mask | bit, mask) = 1.0;
        }
      }
      plus.makeCompressed();
      z.makeCompressed();
      ops.sigma_plus.push_back(kron(plus, id_field));
      ops.sigma_minus.push_back(SparseC(ops.sigma_plus.back().adjoint()));
      ops.sigma_z.push_back(kron(z, id_field));
    }
  }
  return ops;
}

SparseC collective_to_distinguishable(int N, int n_max) {
  const SpaceSpec coll(N, n_max, BasisKind::Collective);
  const SpaceSpec dist(N, n_max, BasisKind::Distinguishable);
  SparseC iso(dist.dim(), coll.dim());
  std::vector<Eigen::Triplet<Complex>> trips;
  for (int mask = 0; mask < dist.atomic_dim(); ++mask) {
    const int k = std::popcount(static_cast<unsigned>(mask));
    const Real weight = std::exp(-0.5 * log_binomial(N, k));
    for (int n = 0; n <= n_max; ++n) trips.emplace_back(dist.index(mask, n), coll.index(k, n), weight);
  }
  iso.setFromTriplets(trips.begin(), trips.end());
  return iso;
}

StateVector embed_in_distinguishable(const StateVector& collective) {
  const SpaceSpec& s = collective.space();
  require(s.basis == BasisKind::Collective, ErrorKind::Domain, "state is not in the collective basis");
  const SparseC iso = collective_to_distinguishable(s.N, s.n_max);
  return StateVector(SpaceSpec(s.N, s.n_max, BasisKind::Distinguishable),
                     iso * collective.amplitudes());
}

}  // namespace dicke
