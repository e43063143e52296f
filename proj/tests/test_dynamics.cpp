#include <cmath>
#include <numbers>
#include <random>

#include <unsupported/Eigen/MatrixFunctions>

#include "doctest.h"
#include "dicke/dynamics.hpp"

using namespace dicke;

namespace {

SystemParams small_params(bool crt = true) {
  SystemParams p;
  p.N = 2;
  p.g0 = 0.08 / std::sqrt(2.0);
  p.Omega0 = 1.72;
  p.with_crt = crt;
  return p;
}

MatrixC random_density(int dim, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<Real> normal;
  MatrixC a(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) a(i, j) = Complex(normal(rng), normal(rng));
  MatrixC rho = a * a.adjoint();
  return rho / rho.trace();
}

// Piecewise-frozen propagator: product of exp(-i H(t_mid) dt) over fine slices.
VectorC frozen_exponential(const SpaceSpec& s, const SystemParams& p,
                           const std::vector<ModulationSchedule>& sch, const VectorC& psi0,
                           Real t_end, int slices) {
  VectorC psi = psi0;
  const Real dt = t_end / slices;
  for (int i = 0; i < slices; ++i) {
    const MatrixC h = MatrixC(hamiltonian_at(s, p, sch, (i + 0.5) * dt));
    const MatrixC u = (Complex(0.0, -dt) * h).exp();
    psi = u * psi;
  }
  return psi;
}

}  // namespace

TEST_CASE("dissipator algebra") {
  const SpaceSpec s(1, 4);
  const OperatorSet ops = build_operators(s);
  const MatrixC vac = DensityMatrix::pure(dicke_fock_state(s, 0, 0)).matrix();
  CHECK(lindblad_dissipator(ops.a, vac).norm() == 0.0);

  const MatrixC one = DensityMatrix::pure(dicke_fock_state(s, 0, 1)).matrix();
  const MatrixC d = lindblad_dissipator(ops.a, one);
  MatrixC expected = MatrixC::Zero(s.dim(), s.dim());
  expected(s.index(0, 0), s.index(0, 0)) = 1.0;
  expected(s.index(0, 1), s.index(0, 1)) = -1.0;
  CHECK((d - expected).norm() < 1e-15);

  for (unsigned seed = 0; seed < 5; ++seed) {
    const MatrixC rho = random_density(s.dim(), seed);
    const MatrixC o = random_density(s.dim(), seed + 100) * Complex(1.0, 0.5);
    CHECK(std::abs(lindblad_dissipator(o, rho).trace()) < 1e-12);
  }
  CHECK_THROWS_AS(lindblad_dissipator(MatrixC::Identity(3, 3), one), Error);
}

TEST_CASE("density matrix helpers") {
  const SpaceSpec s(2, 3);
  const DensityMatrix rho(s, random_density(s.dim(), 9));
  CHECK(rho.trace() == doctest::Approx(1.0));
  CHECK(rho.purity() <= 1.0);
  CHECK(rho.hermiticity_defect() < 1e-14);
  CHECK(rho.min_eigenvalue() >= -1e-14);
  const DensityMatrix pure = DensityMatrix::pure(dicke_fock_state(s, 1, 2));
  CHECK(pure.purity() == doctest::Approx(1.0));
}

TEST_CASE("Schrodinger evolution") {
  SUBCASE("eigenvector of the static Hamiltonian is stationary") {
    const SpaceSpec s(2, 8);
    const SystemParams p = small_params();
    Eigen::SelfAdjointEigenSolver<MatrixC> es(MatrixC(hamiltonian_static(s, p)));
    const StateVector psi0(s, es.eigenvectors().col(7));
    const std::vector<ModulationSchedule> none{{Target::g, -1, 0.0, 1.5, 0.0}};
    const Trajectory tr = evolve_schrodinger(s, p, none, psi0, {0.0, 200.0}, 11);
    for (const auto& o : tr.observables) {
      CHECK(std::abs(o.n_ph - tr.observables.front().n_ph) < 1e-8);
      CHECK(std::abs(o.n_at - tr.observables.front().n_at) < 1e-8);
    }
  }
  SUBCASE("rotating-wave dynamics conserve the excitation number") {
    const SpaceSpec s(2, 10);
    const SystemParams p = small_params(false);
    EvolveOptions tight;
    tight.tol = 1e-12;
    const Trajectory tr = evolve_schrodinger(s, p, {}, coherent_state(s, std::sqrt(2.0), 1),
                                             {0.0, 100.0}, 21, tight);
    const Real first = tr.observables.front().n_ph + tr.observables.front().n_at;
    for (const auto& o : tr.observables) CHECK(std::abs(o.n_ph + o.n_at - first) < 1e-10);
    CHECK(tr.stats.max_norm_drift < 1e-7);
  }
  SUBCASE("matches a piecewise-frozen matrix exponential") {
    const SpaceSpec s(2, 3);
    SystemParams p = small_params();
    p.g0 = 0.1;
    const std::vector<ModulationSchedule> sch{{Target::g, -1, 0.05, 1.3, 0.4},
                                              {Target::Omega, -1, 0.04, 1.3, 1.1}};
    const StateVector psi0 = dicke_fock_state(s, 0, 3);
    const Real t_end = 6.0;
    const VectorC oracle = frozen_exponential(s, p, sch, psi0.amplitudes(), t_end, 4000);
    for (Frame frame : {Frame::Lab, Frame::Interaction}) {
      EvolveOptions opts;
      opts.frame = frame;
      opts.store_states = true;
      const Trajectory tr = evolve_schrodinger(s, p, sch, psi0, {0.0, t_end}, 2, opts);
      CHECK((tr.states.back() - oracle).norm() < 1e-5);
    }
  }
  SUBCASE("tighter tolerance improves the end-time error") {
    const SpaceSpec s(2, 3);
    SystemParams p = small_params();
    p.g0 = 0.1;
    const std::vector<ModulationSchedule> sch{{Target::g, -1, 0.05, 1.3, 0.0}};
    const StateVector psi0 = dicke_fock_state(s, 0, 3);
    EvolveOptions ref;
    ref.tol = 1e-13;
    ref.store_states = true;
    const VectorC exact = evolve_schrodinger(s, p, sch, psi0, {0.0, 40.0}, 2, ref).states.back();
    Real previous = 1.0;
    for (Real tol : {1e-6, 1e-8, 1e-10}) {
      EvolveOptions o;
      o.tol = tol;
      o.drift_limit = 1.0;
      o.store_states = true;
      const Real err =
          (evolve_schrodinger(s, p, sch, psi0, {0.0, 40.0}, 2, o).states.back() - exact).norm();
      CHECK(err < previous);
      previous = err;
    }
  }
  SUBCASE("rejects out-of-range tolerances and unnormalized input") {
    const SpaceSpec s(2, 3);
    EvolveOptions o;
    o.tol = 1e-3;
    CHECK_THROWS_AS(evolve_schrodinger(s, small_params(), {}, dicke_fock_state(s, 0, 1),
                                       {0.0, 1.0}, 2, o),
                    Error);
    CHECK_THROWS_AS(evolve_schrodinger(s, small_params(), {},
                                       StateVector(s, 2.0 * dicke_fock_state(s, 0, 1).amplitudes()),
                                       {0.0, 1.0}, 2),
                    Error);
  }
  SUBCASE("cutoff saturation is reported") {
    const SpaceSpec s(1, 3);
    SystemParams p = small_params();
    p.N = 1;
    const Trajectory tr = evolve_schrodinger(s, p, {}, dicke_fock_state(s, 0, 3), {0.0, 1.0}, 3);
    CHECK(!tr.stats.warnings.empty());
    EvolveOptions strict;
    strict.cutoff_is_error = true;
    CHECK_THROWS_AS(evolve_schrodinger(s, p, {}, dicke_fock_state(s, 0, 3),
                                       {0.0, 1.0}, 3, strict),
                    Error);
  }
  SUBCASE("series selectors") {
    const SpaceSpec s(2, 6);
    EvolveOptions o;
    o.tracked = {s.index(0, 5), s.index(2, 3)};
    const Trajectory tr =
        evolve_schrodinger(s, small_params(), {}, dicke_fock_state(s, 0, 5), {0.0, 5.0}, 6, o);
    CHECK(tr.series("n_ph").size() == 6);
    CHECK(tr.series("p_ph:5").front() == doctest::Approx(1.0));
    CHECK(tr.series("tracked:0").front() == doctest::Approx(1.0));
    CHECK_THROWS_AS(tr.series("bogus"), Error);
  }
}

TEST_CASE("stroboscopic evolution matches continuous integration") {
  const SpaceSpec s(2, 6);
  const SystemParams p = small_params();
  const Real eta = 1.52;
  const std::vector<ModulationSchedule> sch{{Target::g, -1, 0.1 * p.g0, eta, 0.0}};
  const AffineHamiltonian h = hamiltonian_affine(s, p, sch);
  const StateVector psi0 = dicke_fock_state(s, 0, 5);
  const Real period = 2.0 * std::numbers::pi / eta;
  EvolveOptions o;
  o.store_states = true;
  const Trajectory strobe = evolve_stroboscopic(h, psi0, 40, 10, o);
  const Trajectory cont = evolve_schrodinger(h, psi0, {0.0, 40 * period}, 5, o);
  REQUIRE(strobe.times.size() == cont.times.size());
  for (std::size_t i = 0; i < strobe.times.size(); ++i) {
    CHECK(strobe.times[i] == doctest::Approx(cont.times[i]));
    CHECK((strobe.states[i] - cont.states[i]).norm() < 1e-7);
  }
  CHECK(strobe.stats.unitarity_defect < 1e-8);
}

TEST_CASE("Floquet sampling off the stroboscopic grid") {
  const SpaceSpec s(2, 6);
  const SystemParams p = small_params();
  const std::vector<ModulationSchedule> sch{{Target::g, -1, 0.1 * p.g0, 1.52, 0.4}};
  const AffineHamiltonian h = hamiltonian_affine(s, p, sch);
  const StateVector psi0 = dicke_fock_state(s, 0, 5);
  EvolveOptions o;
  o.store_states = true;
  // 7 samples over 23.7 periods: none lands on a period boundary except t = 0.
  const Real t_end = 23.7 * 2.0 * std::numbers::pi / 1.52;
  const Trajectory fl = evolve_floquet_sampled(h, psi0, {0.0, t_end}, 7, o);
  const Trajectory direct = evolve_schrodinger(h, psi0, {0.0, t_end}, 7, o);
  REQUIRE(fl.states.size() == direct.states.size());
  for (std::size_t i = 0; i < fl.states.size(); ++i) {
    CHECK(fl.times[i] == direct.times[i]);
    CHECK((fl.states[i] - direct.states[i]).norm() < 1e-7);
  }
  CHECK_THROWS_AS(evolve_floquet_sampled(h, psi0, {-1.0, 1.0}, 3, o), Error);
}

TEST_CASE("Lindblad evolution") {
  SUBCASE("unitary limit reproduces the Schrodinger observables") {
    const SpaceSpec d(2, 4, BasisKind::Distinguishable);
    RealisticParams r;
    r.g = {0.05, 0.052};
    r.Omega = {1.7, 1.72};
    const std::vector<ModulationSchedule> sch{{Target::g, 0, 0.005, 1.4, 0.0},
                                              {Target::g, 1, 0.0052, 1.4, 0.0}};
    const StateVector psi0 = embed_in_distinguishable(dicke_fock_state(SpaceSpec(2, 4), 0, 3));
    const AffineHamiltonian h = realistic_affine(d, r, sch);
    const Trajectory pure = evolve_schrodinger(h, psi0, {0.0, 30.0}, 7);
    const Trajectory mixed =
        evolve_lindblad(d, r, sch, DissipationRates{0.0, {0.0, 0.0}, {0.0, 0.0}},
                        DensityMatrix::pure(psi0), {0.0, 30.0}, 7);
    for (std::size_t i = 0; i < pure.times.size(); ++i) {
      CHECK(std::abs(pure.observables[i].n_ph - mixed.observables[i].n_ph) < 1e-7);
      CHECK(std::abs(pure.observables[i].n_at - mixed.observables[i].n_at) < 1e-7);
    }
  }
  SUBCASE("decoupled damped cavity") {
    const SpaceSpec s(1, 20);
    SystemParams p = small_params();
    p.N = 1;
    p.g0 = 0.0;
    const Real kappa = 0.05;
    const AffineHamiltonian h = hamiltonian_affine(s, p, {});
    const Trajectory tr = evolve_lindblad(h, DissipationRates{kappa, {}, {}},
                                          DensityMatrix::pure(coherent_state(s, std::sqrt(3.0), 0)),
                                          {0.0, 40.0}, 9);
    const Real n0 = tr.observables.front().n_ph;
    for (std::size_t i = 0; i < tr.times.size(); ++i) {
      const Real expected = n0 * std::exp(-kappa * tr.times[i]);
      CHECK(std::abs(tr.observables[i].n_ph - expected) <= 1e-6 * expected);
    }
  }
  SUBCASE("dissipation lowers purity and keeps rho physical") {
    const SpaceSpec d(2, 4, BasisKind::Distinguishable);
    RealisticParams r;
    r.g = {0.05, 0.05};
    r.Omega = {1.7, 1.7};
    const StateVector psi0 = embed_in_distinguishable(dicke_fock_state(SpaceSpec(2, 4), 2, 2));
    const Trajectory tr =
        evolve_lindblad(d, r, {}, DissipationRates{0.01, {0.01, 0.02}, {0.01, 0.005}},
                        DensityMatrix::pure(psi0), {0.0, 50.0}, 11);
    for (std::size_t i = 1; i < tr.purity.size(); ++i) CHECK(tr.purity[i] < tr.purity[i - 1]);
    CHECK(tr.stats.min_eigenvalue > -1e-7);
    CHECK(tr.stats.max_norm_drift < 1e-7);
    CHECK(tr.stats.max_hermiticity_defect < 1e-12);
  }
  SUBCASE("per-qubit rates need the distinguishable basis") {
    const SpaceSpec s(2, 3);
    const AffineHamiltonian h = hamiltonian_affine(s, small_params(), {});
    CHECK_THROWS_AS(evolve_lindblad(h, DissipationRates{0.0, {0.1, 0.1}, {}},
                                    DensityMatrix::pure(dicke_fock_state(s, 1, 1)), {0.0, 1.0}, 2),
                    Error);
  }
}
