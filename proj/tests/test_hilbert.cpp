#include <cmath>
#include <random>

#include "doctest.h"
#include "dicke/hilbert.hpp"

using namespace dicke;

namespace {

VectorC random_state(int dim, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<Real> normal;
  VectorC v(dim);
  for (auto& c : v) c = Complex(normal(rng), normal(rng));
  return v.normalized();
}

}  // namespace

TEST_CASE("space dimensions and index bijection") {
  const SpaceSpec collective(3, 4);
  CHECK(collective.dim() == 4 * 5);
  const SpaceSpec dist(3, 4, BasisKind::Distinguishable);
  CHECK(dist.dim() == 8 * 5);
  for (const auto& s : {collective, dist}) {
    for (int i = 0; i < s.dim(); ++i) CHECK(s.index(s.atomic_of(i), s.photon_of(i)) == i);
  }
  CHECK_THROWS_AS(SpaceSpec(0, 3), Error);
  CHECK_THROWS_AS(SpaceSpec(2, -1), Error);
}

TEST_CASE("ladder coefficient") {
  CHECK(f_coefficient(0, 2) == doctest::Approx(std::sqrt(2.0)));
  CHECK(f_coefficient(2, 2) == 0.0);
  CHECK(f_coefficient(0, 6) == doctest::Approx(std::sqrt(6.0)));
  CHECK(f_coefficient(1, 2) == doctest::Approx(std::sqrt(2.0)));
  CHECK(f_coefficient(1, 3) == doctest::Approx(2.0));
  CHECK_THROWS_AS(f_coefficient(3, 2), Error);
  CHECK_THROWS_AS(f_coefficient(-1, 2), Error);
}

TEST_CASE("Dicke-Fock product states") {
  const SpaceSpec s(2, 6);
  const StateVector psi = dicke_fock_state(s, 0, 5);
  CHECK(std::abs(psi[s.index(0, 5)] - 1.0) == 0.0);
  CHECK(psi.norm() == doctest::Approx(1.0));

  const SpaceSpec d(2, 4, BasisKind::Distinguishable);
  const StateVector one = dicke_fock_state(d, 1, 0);
  CHECK(std::abs(one[d.index(0b01, 0)]) == doctest::Approx(1.0 / std::sqrt(2.0)));
  CHECK(std::abs(one[d.index(0b10, 0)]) == doctest::Approx(1.0 / std::sqrt(2.0)));
  const StateVector two = dicke_fock_state(d, 2, 3);
  CHECK(std::abs(two[d.index(0b11, 3)]) == doctest::Approx(1.0));

  CHECK_THROWS_AS(dicke_fock_state(s, 3, 0), Error);
  CHECK_THROWS_AS(dicke_fock_state(s, 0, 7), Error);
}

TEST_CASE("coherent states") {
  const SpaceSpec s(2, 30);
  const StateVector vac = coherent_state(s, 0.0, 0);
  CHECK(std::abs(vac[s.index(0, 0)]) == doctest::Approx(1.0));

  const ObservableSet o = observables(coherent_state(s, std::sqrt(5.5), 0));
  CHECK(o.p_ph[5] == doctest::Approx(0.17).epsilon(0.01));
  CHECK(std::abs(o.n_ph - 5.5) < 1e-6);
  CHECK(o.n_at == doctest::Approx(0.0));

  const ObservableSet o3 = observables(coherent_state(s, std::sqrt(3.0), 1));
  CHECK(std::abs(o3.n_ph - 3.0) < 1e-6);
  CHECK(o3.n_at == doctest::Approx(1.0));

  SUBCASE("cutoff guard names the required cutoff") {
    const SpaceSpec small(2, 8);
    try {
      coherent_state(small, 3.0, 0);
      FAIL("expected cutoff error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Cutoff);
      CHECK(std::string(e.what()).find("18") != std::string::npos);
    }
  }
  CHECK(default_fock_cutoff(0.0) == 20);
  CHECK(default_fock_cutoff(5.5) == static_cast<int>(std::ceil(5.5 + 8 * std::sqrt(5.5) + 10)));
  CHECK(coherent_tail_mass(5.5, default_fock_cutoff(5.5)) < 1e-9);
  CHECK(coherent_tail_mass(3.0, default_fock_cutoff(3.0)) < 1e-9);
}

TEST_CASE("observables of simple states") {
  const SpaceSpec s(2, 6);
  const ObservableSet o = observables(dicke_fock_state(s, 0, 5));
  CHECK(o.n_ph == doctest::Approx(5.0));
  CHECK(o.n_at == doctest::Approx(0.0));

  VectorC mix = dicke_fock_state(s, 0, 5).amplitudes() + dicke_fock_state(s, 2, 3).amplitudes();
  const ObservableSet m = observables(StateVector(s, mix / std::sqrt(2.0)));
  CHECK(m.n_ph == doctest::Approx(4.0));
  CHECK(m.n_at == doctest::Approx(1.0));
  CHECK(m.p_ph[5] == doctest::Approx(0.5));
  CHECK(m.p_ph[3] == doctest::Approx(0.5));

  CHECK_THROWS_AS(observables(StateVector(s, 2.0 * mix)), Error);

  const ObservableSet r = observables(StateVector(s, random_state(s.dim(), 7)));
  Real sum_ph = 0, sum_at = 0, mean_ph = 0, mean_at = 0;
  for (std::size_t k = 0; k < r.p_ph.size(); ++k) {
    sum_ph += r.p_ph[k];
    mean_ph += k * r.p_ph[k];
  }
  for (std::size_t k = 0; k < r.p_at.size(); ++k) {
    sum_at += r.p_at[k];
    mean_at += k * r.p_at[k];
  }
  CHECK(std::abs(sum_ph - 1.0) < 1e-9);
  CHECK(std::abs(sum_at - 1.0) < 1e-9);
  CHECK(r.n_ph == doctest::Approx(mean_ph));
  CHECK(r.n_at == doctest::Approx(mean_at));
}

TEST_CASE("density-matrix observables agree with the pure-state ones") {
  const SpaceSpec s(2, 5);
  const VectorC psi = random_state(s.dim(), 3);
  const MatrixC rho = psi * psi.adjoint();
  const ObservableSet a = observables(StateVector(s, psi));
  const ObservableSet b = observables(s, rho);
  CHECK(a.n_ph == doctest::Approx(b.n_ph));
  CHECK(a.n_at == doctest::Approx(b.n_at));
}

TEST_CASE("operator algebra") {
  const SpaceSpec s(2, 7);
  const OperatorSet ops = build_operators(s);
  const VectorC k5 = dicke_fock_state(s, 1, 5).amplitudes();
  CHECK((ops.n * k5 - 5.0 * k5).norm() < 1e-14);
  CHECK(((ops.a_dag * ops.a) * k5 - 5.0 * k5).norm() < 1e-14);

  const VectorC up = ops.sigma[1][0] * dicke_fock_state(s, 0, 3).amplitudes();
  CHECK((up - dicke_fock_state(s, 1, 3).amplitudes()).norm() < 1e-14);

  // Commutator on states with an empty top Fock level.
  VectorC psi = random_state(s.dim(), 11);
  for (int k = 0; k <= 2; ++k) psi[s.index(k, s.n_max)] = 0.0;
  psi.normalize();
  const Complex aad = psi.dot(ops.a * (ops.a_dag * psi));
  const Complex ada = psi.dot(ops.a_dag * (ops.a * psi));
  CHECK(std::abs(aad - ada - 1.0) < 1e-12);

  // a is exactly sparse: n_max entries per atomic block.
  CHECK(ops.a.nonZeros() == s.n_max * s.atomic_dim());

  for (int k = 0; k < 2; ++k) {
    const VectorC kn = dicke_fock_state(s, k + 1, 2).amplitudes();
    const VectorC back = ops.sigma[k + 1][k] * (ops.sigma[k][k + 1] * kn);
    CHECK((back - kn).norm() < 1e-14);
  }
}

TEST_CASE("per-qubit operators") {
  const SpaceSpec d(2, 3, BasisKind::Distinguishable);
  const OperatorSet ops = build_operators(d);
  const VectorC gg = dicke_fock_state(d, 0, 1).amplitudes();
  const VectorC excited0 = ops.sigma_plus[0] * gg;
  CHECK(std::abs(excited0[d.index(0b01, 1)] - 1.0) < 1e-14);
  CHECK(std::abs(gg.dot(ops.sigma_z[0] * gg) + 1.0) < 1e-14);
  CHECK(std::abs(excited0.dot(ops.sigma_z[0] * excited0) - 1.0) < 1e-14);
}

TEST_CASE("collective to distinguishable embedding preserves observables") {
  const SpaceSpec s(3, 5);
  const StateVector psi(s, random_state(s.dim(), 5));
  const StateVector emb = embed_in_distinguishable(psi);
  CHECK(emb.space().basis == BasisKind::Distinguishable);
  CHECK(std::abs(emb.norm() - 1.0) < 1e-12);
  const ObservableSet a = observables(psi);
  const ObservableSet b = observables(emb);
  CHECK(std::abs(a.n_ph - b.n_ph) < 1e-12);
  CHECK(std::abs(a.n_at - b.n_at) < 1e-12);
  for (std::size_t k = 0; k < a.p_at.size(); ++k) CHECK(std::abs(a.p_at[k] - b.p_at[k]) < 1e-12);
  for (std::size_t k = 0; k < a.p_ph.size(); ++k) CHECK(std::abs(a.p_ph[k] - b.p_ph[k]) < 1e-12);
}
