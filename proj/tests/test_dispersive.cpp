#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Eigenvalues>

#include "doctest.h"
#include "dicke/dispersive.hpp"

using namespace dicke;

namespace {

SystemParams figure1(bool crt = false) {
  SystemParams p;
  p.N = 2;
  p.g0 = 0.08 / std::sqrt(2.0);
  p.Omega0 = 1.72;
  p.with_crt = crt;
  return p;
}

std::vector<ModulationSchedule> g_drive(const SystemParams& p, Real eta = 1.5, Real phi = 0.0) {
  return {{Target::g, -1, 0.1 * p.g0, eta, phi}};
}

}  // namespace

TEST_CASE("perturbative eigenfrequencies") {
  SystemParams p = figure1();
  SUBCASE("uncoupled limit") {
    p.g0 = 0.0;
    for (int n = 0; n < 6; ++n)
      for (int k = 0; k <= std::min(n, p.N); ++k)
        CHECK(lambda_perturbative(n, k, p) == doctest::Approx(n - k * p.detuning()));
  }
  SUBCASE("hand-evaluated values") {
    const Real d = p.dispersive_shift();
    CHECK(lambda_perturbative(5, 0, p) == doctest::Approx(5.0 + 10.0 * d));
    CHECK(lambda_perturbative(5, 2, p) == doctest::Approx(5.0 - 2.0 * p.detuning() - 8.0 * d));
  }
  SUBCASE("matches the second-order shift of a 2x2 block") {
    // N = 1, n = 1 block: [[omega0, g], [g, Omega0]] -> omega0 + g^2/Delta to second order.
    SystemParams q = figure1();
    q.N = 1;
    q.g0 = 1e-3;
    const Real delta = q.detuning();
    const Real exact = 0.5 * (q.omega0 + q.Omega0) + 0.5 * std::copysign(1.0, delta) *
                                                         std::sqrt(delta * delta + 4 * q.g0 * q.g0);
    CHECK(std::abs(lambda_perturbative(1, 0, q) - exact) < 1e-11);
  }
}

TEST_CASE("perturbative dressed states") {
  const SystemParams p = figure1();
  const SpaceSpec s(2, 8);
  SUBCASE("g0 = 0 gives bare states") {
    SystemParams q = p;
    q.g0 = 0.0;
    const StateVector phi = dressed_state_perturbative(s, 5, 1, q);
    CHECK(std::abs(phi[s.index(1, 4)] - 1.0) < 1e-15);
  }
  SUBCASE("k = 0 has no lower components and a positive leading amplitude") {
    const StateVector phi = dressed_state_perturbative(s, 5, 0, p);
    CHECK(phi[s.index(0, 5)].real() > 0.9);
    CHECK(std::abs(phi.norm() - 1.0) < 1e-14);
  }
  SUBCASE("overlap with exact eigenvectors") {
    const DressedSpectrum exact = spectrum_exact(s, p);
    for (int n = 2; n <= 7; ++n)
      for (int k = 0; k <= 2; ++k) {
        const Complex ov = dressed_state_perturbative(s, n, k, p).amplitudes().dot(
            exact.at({n, k}).state.amplitudes());
        CHECK(std::abs(ov) > 0.999);
      }
  }
}

TEST_CASE("exact spectrum") {
  SUBCASE("uncoupled") {
    SystemParams p = figure1();
    p.g0 = 0.0;
    const DressedSpectrum sp = spectrum_exact(SpaceSpec(2, 6), p);
    for (const auto& e : sp.entries)
      CHECK(e.lambda == doctest::Approx(e.label.m - e.label.S * p.detuning()));
  }
  SUBCASE("subspace sizes and the N = 2, m = 1 block") {
    const SystemParams p = figure1();
    const DressedSpectrum sp = spectrum_exact(SpaceSpec(2, 6), p);
    for (int m = 0; m <= 6; ++m) CHECK(sp.labels(m).size() == static_cast<std::size_t>(std::min(m, 2) + 1));
    // [[omega0, g sqrt2], [g sqrt2, Omega0]]
    const Real c = p.g0 * std::sqrt(2.0);
    const Real mean = 0.5 * (p.omega0 + p.Omega0);
    const Real half = 0.5 * std::sqrt(std::pow(p.detuning(), 2) + 4 * c * c);
    CHECK(sp.at({1, 0}).lambda == doctest::Approx(mean - half).epsilon(1e-13));
    CHECK(sp.at({1, 1}).lambda == doctest::Approx(mean + half).epsilon(1e-13));
  }
  SUBCASE("perturbative agreement at the figure 1 point") {
    const SystemParams p = figure1();
    const DressedSpectrum sp = spectrum_exact(SpaceSpec(2, 8), p);
    const Real ratio = p.g0 / std::abs(p.detuning());
    for (int n = 0; n <= 6; ++n)
      for (int k = 0; k <= std::min(n, 2); ++k) {
        const Real err = std::abs(sp.at({n, k}).lambda - lambda_perturbative(n, k, p));
        CHECK(err < 50.0 * std::pow(ratio * std::sqrt(n + 1.0), 3) * std::abs(p.detuning()));
      }
  }
  SUBCASE("halving g0 shrinks the perturbative remainder at least sixfold") {
    SystemParams p = figure1();
    const SpaceSpec s(2, 8);
    const DressedSpectrum a = spectrum_exact(s, p);
    SystemParams q = p;
    q.g0 *= 0.5;
    const DressedSpectrum b = spectrum_exact(s, q);
    for (int n = 1; n <= 6; ++n)
      for (int k = 0; k <= std::min(n, 2); ++k) {
        const Real ea = std::abs(a.at({n, k}).lambda - lambda_perturbative(n, k, p));
        const Real eb = std::abs(b.at({n, k}).lambda - lambda_perturbative(n, k, q));
        if (ea < 1e-13) continue;
        CHECK(ea / eb >= 6.0);
      }
  }
  SUBCASE("phase convention and labelling with counter-rotating terms") {
    const DressedSpectrum sp = spectrum_exact(SpaceSpec(2, 10), figure1(true));
    for (const auto& e : sp.entries) {
      Eigen::Index arg = 0;
      e.state.amplitudes().cwiseAbs().maxCoeff(&arg);
      CHECK(std::abs(e.state[static_cast<int>(arg)].imag()) < 1e-14);
      CHECK(e.state[static_cast<int>(arg)].real() > 0.0);
      CHECK(e.overlap > 0.5);
    }
    CHECK(sp.at({0, 0}).lambda < 0.0);
  }
  SUBCASE("strong coupling makes labelling ambiguous") {
    SystemParams p = figure1();
    p.Omega0 = 1.0 + 1e-3;
    try {
      spectrum_exact(SpaceSpec(2, 6), p);
      FAIL("expected labelling error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Labeling);
      CHECK(std::string(e.what()).find("m=") != std::string::npos);
    }
  }
}

TEST_CASE("counter-rotating shift") {
  const SpaceSpec s(2, 12);
  SUBCASE("vanishes without coupling") {
    SystemParams p = figure1();
    p.g0 = 0.0;
    CHECK(crt_shift(3, 1, spectrum_exact(s, p), p) == 0.0);
  }
  SUBCASE("pushes the ground state down") {
    const SystemParams p = figure1();
    CHECK(crt_shift(0, 0, spectrum_exact(s, p), p) < 0.0);
  }
  SUBCASE("improves on the rotating-wave eigenvalues at least fivefold") {
    const SystemParams p = figure1();
    const DressedSpectrum tc = with_crt_shifts(spectrum_exact(s, p));
    const DressedSpectrum crt = spectrum_exact(s, figure1(true));
    for (int m = 0; m <= 6; ++m)
      for (int S : tc.labels(m)) {
        const Real exact = crt.at({m, S}).lambda;
        const Real before = std::abs(tc.at({m, S}).lambda - exact);
        const Real after = std::abs(tc.at({m, S}).lambda_tilde() - exact);
        CHECK(after * 5.0 <= before);
      }
  }
  SUBCASE("needs the m + 2 subspace") {
    const SystemParams p = figure1();
    try {
      crt_shift(11, 0, spectrum_exact(s, p), p);
      FAIL("expected cutoff error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Cutoff);
    }
  }
  SUBCASE("validity ratio is reported") {
    const SystemParams p = figure1();
    const Real r = crt_validity_ratio(5, 0, spectrum_exact(s, p), p);
    CHECK(r > 0.0);
    CHECK(r < 1.0);
  }
}

TEST_CASE("modulation coefficients") {
  const SystemParams p = figure1();
  const DressedSpectrum sp = spectrum_exact(SpaceSpec(2, 8), p);
  SUBCASE("zero depth") {
    const std::vector<ModulationSchedule> none{{Target::g, -1, 0.0, 1.0, 0.0}};
    CHECK(upsilon(Target::g, 0, 5, 0, 2, sp, none) == Complex(0.0, 0.0));
  }
  SUBCASE("omega coefficient only at k = 0") {
    const std::vector<ModulationSchedule> w{{Target::omega, -1, 0.01, 1.0, 0.0}};
    CHECK(std::abs(upsilon(Target::omega, 0, 5, 0, 0, sp, w)) > 0.0);
    CHECK(upsilon(Target::omega, 1, 5, 0, 0, sp, w) == Complex(0.0, 0.0));
    CHECK(upsilon(Target::omega, 2, 5, 0, 0, sp, w) == Complex(0.0, 0.0));
  }
  SUBCASE("atomic-frequency coefficient of the bare ground ladder vanishes") {
    SystemParams q = p;
    q.g0 = 0.0;
    const DressedSpectrum bare = spectrum_exact(SpaceSpec(2, 8), q);
    const std::vector<ModulationSchedule> o{{Target::Omega, -1, 0.05, 1.0, 0.0}};
    for (int k = 0; k <= 2; ++k) CHECK(std::abs(upsilon(Target::Omega, k, 5, 0, 0, bare, o)) == 0.0);
  }
  SUBCASE("sum over k reproduces the generator matrix element") {
    const auto sch = g_drive(p);
    Complex total = 0.0;
    for (int k = 0; k <= 2; ++k) total += upsilon(Target::g, k, 5, 0, 1, sp, sch);
    const OperatorSet ops = build_operators(sp.space);
    const VectorC applied = coupling_operator(ops, false) * sp.at({5, 1}).state.amplitudes();
    const Complex direct = 0.1 * p.g0 * sp.at({5, 0}).state.amplitudes().dot(applied);
    CHECK(std::abs(total - direct) < 1e-15);
  }
}

TEST_CASE("transition rates") {
  const SystemParams p = figure1();
  const SpaceSpec s(2, 10);
  const DressedSpectrum sp = with_crt_shifts(spectrum_exact(s, p));

  SUBCASE("no modulation, no rate") {
    const std::vector<ModulationSchedule> none{{Target::g, -1, 0.0, 1.0, 0.0}};
    CHECK(std::abs(transition_rate_general(5, 0, 2, sp, none).xi) == 0.0);
  }
  SUBCASE("antisymmetry for random modulation") {
    std::mt19937 rng(42);
    std::uniform_real_distribution<Real> u(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
      const std::vector<ModulationSchedule> sch{
          {Target::g, -1, 0.1 * p.g0 * u(rng), 1.4, 2 * std::numbers::pi * u(rng)},
          {Target::Omega, -1, 0.05 * u(rng), 1.4, 2 * std::numbers::pi * u(rng)},
          {Target::omega, -1, 0.05 * u(rng), 1.4, 2 * std::numbers::pi * u(rng)}};
      const int n = 3 + trial % 5;
      const Complex a = transition_rate_general(n, 0, 2, sp, sch).xi;
      const Complex b = transition_rate_general(n, 2, 0, sp, sch).xi;
      CHECK(std::abs(std::conj(a) + b) < 1e-14);
    }
  }
  SUBCASE("general rate agrees with the closed form") {
    const auto sch = g_drive(p);
    const TransitionRate general = transition_rate_general(5, 0, 2, sp, sch);
    const TransitionRate closed = two_photon_rate_closed_form(5, 0, p, sch);
    const Real expected = 0.1 * p.g0 * std::sqrt(80.0) / std::pow(9.0 * std::sqrt(2.0), 3);
    CHECK(std::abs(closed.xi) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(std::abs(closed.xi) == doctest::Approx(4.34e-4 * p.g0).epsilon(2e-3));
    CHECK(std::abs(std::abs(general.xi) / std::abs(closed.xi) - 1.0) < 0.25);
    CHECK(general.eta_res == doctest::Approx(std::abs(sp.at({5, 0}).lambda_tilde() -
                                                      sp.at({5, 2}).lambda_tilde())));
  }
  SUBCASE("closed form and general rate agree inside the weak-dispersive regime") {
    for (Real scale : {0.5, 0.8}) {
      SystemParams q = figure1();
      q.N = 3;
      q.g0 *= scale;
      const SpaceSpec s3(3, 12);
      const DressedSpectrum sp3 = with_crt_shifts(spectrum_exact(s3, q));
      const auto sch = g_drive(q);
      for (int n = 2; n <= 6; ++n)
        for (int k = 0; k + 2 <= std::min(n, 3); ++k) {
          if (q.g0 * std::sqrt(n * 3.0) / std::abs(q.detuning()) > 0.15) continue;
          const Real general = std::abs(transition_rate_general(n, k, k + 2, sp3, sch).xi);
          const Real closed = std::abs(two_photon_rate_closed_form(n, k, q, sch).xi);
          CHECK(std::abs(general / closed - 1.0) < 0.25);
        }
    }
  }
  SUBCASE("closed-form selection rules") {
    const auto sch = g_drive(p);
    CHECK(std::abs(two_photon_rate_closed_form(5, 1, p, sch).xi) == 0.0);
    CHECK(std::abs(two_photon_rate_closed_form(5, 3, p, sch).xi) == 0.0);
    CHECK(std::abs(two_photon_rate_closed_form(1, 0, p, sch).xi) == 0.0);
    const std::vector<ModulationSchedule> cancel{{Target::omega, -1, 0.02, 1.0, 0.4},
                                                 {Target::Omega, -1, 0.02, 1.0, 0.4}};
    CHECK(std::abs(two_photon_rate_closed_form(5, 0, p, cancel).xi) < 1e-20);
  }
  SUBCASE("selectivity of the figure 1 transition") {
    const Real xi = std::abs(two_photon_rate_closed_form(5, 0, p, g_drive(p)).xi);
    CHECK(std::abs(p.dispersive_shift()) / xi > 10.0);
  }
  SUBCASE("degenerate levels are refused") {
    SystemParams q = figure1();
    q.g0 = 0.0;
    q.Omega0 = 1.0 + 1e-13;
    const DressedSpectrum flat = spectrum_exact(SpaceSpec(2, 4), q);
    try {
      transition_rate_general(2, 0, 1, flat, g_drive(figure1()));
      FAIL("expected degeneracy error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Degeneracy);
    }
  }
}

TEST_CASE("resonant modulation frequency") {
  SystemParams p = figure1();
  SUBCASE("uncoupled") {
    SystemParams q = p;
    q.g0 = 0.0;
    CHECK(eta_resonant(5, 0, q) == doctest::Approx(2 * 0.72));
  }
  SUBCASE("figure 1 substitution") {
    CHECK(eta_resonant(5, 0, p) / (2 * 0.72) == doctest::Approx(1.0 + 9.0 / 162.0));
  }
  SUBCASE("degenerate pairs") {
    for (int N = 2; N <= 6; ++N) {
      p.N = N;
      CHECK(eta_resonant(4, 0, p) == eta_resonant(7, 1, p));
      for (int n = 2; n < 8; ++n)
        for (int k = 0; k < 2; ++k)
          CHECK(eta_resonant(n, k, p) == doctest::Approx(eta_resonant(n + 3, k + 1, p)).epsilon(1e-15));
    }
  }
}

TEST_CASE("phase function") {
  const SystemParams p = figure1();
  const DressedSpectrum sp = spectrum_exact(SpaceSpec(2, 8), p);
  const auto sch = g_drive(p, 1.52, 0.3);
  CHECK(phase_Phi(5, 0, 0.0, sp, sch) == 0.0);
  const Real T = 2.0 * std::numbers::pi / 1.52;
  for (Real t : {0.4, 3.3, 17.0})
    CHECK(std::abs(phase_Phi(5, 1, t, sp, sch) - phase_Phi(5, 1, t + T, sp, sch)) < 1e-12);
  const std::vector<ModulationSchedule> none{{Target::g, -1, 0.0, 1.52, 0.3}};
  CHECK(phase_Phi(5, 1, 2.0, sp, none) == 0.0);
  const std::vector<ModulationSchedule> still{{Target::g, -1, 0.01, 0.0, 0.3}};
  CHECK_THROWS_AS(phase_Phi(5, 1, 2.0, sp, still), Error);
}

TEST_CASE("resonant two-level solution") {
  const Complex xi(2e-3, -1e-3);
  const auto [bt, bs] = rwa_solution(0.6, Complex(0.0, 0.8), xi, 0.0);
  CHECK(bt == Complex(0.6));
  CHECK(bs == Complex(0.0, 0.8));
  const auto [ft, fs] = rwa_solution(1.0, 0.0, xi, std::numbers::pi / (2 * std::abs(xi)));
  CHECK(std::abs(std::abs(fs) - 1.0) < 1e-14);
  CHECK(std::abs(ft) < 1e-12);
  std::mt19937 rng(1);
  std::uniform_real_distribution<Real> u(-1.0, 1.0);
  for (int i = 0; i < 50; ++i) {
    Complex a(u(rng), u(rng)), b(u(rng), u(rng));
    const Real nrm = std::sqrt(std::norm(a) + std::norm(b));
    a /= nrm;
    b /= nrm;
    const auto [x, y] = rwa_solution(a, b, Complex(u(rng), u(rng)), 100.0 * u(rng));
    CHECK(std::abs(std::norm(x) + std::norm(y) - 1.0) < 1e-14);
  }
  const auto [ct, cs] = rwa_solution(0.6, 0.8, 0.0, 10.0);
  CHECK(ct == Complex(0.6));
  CHECK(cs == Complex(0.8));
}

TEST_CASE("effective slow-amplitude dynamics") {
  const SystemParams p = figure1();
  const SpaceSpec s(2, 10);
  const DressedSpectrum sp = with_crt_shifts(spectrum_exact(s, p));
  const auto sch = g_drive(p);

  SUBCASE("no coupling keeps amplitudes constant") {
    const std::vector<ModulationSchedule> none{{Target::g, -1, 0.0, 1.5, 0.0}};
    const SubspaceCoupling c = subspace_coupling(5, sp, none);
    EffectiveState b0{{{5, 0}, {5, 1}, {5, 2}}, VectorC::Zero(3), VectorR::Zero(3), 0.0};
    b0.b << 0.6, Complex(0, 0.8), 0.0;
    const auto traj = evolve_effective(b0, c, 1.5, {10.0, 1000.0});
    CHECK((traj.back().b - b0.b).norm() < 1e-14);
  }
  SUBCASE("two levels at resonance follow the closed-form rotation") {
    const SubspaceCoupling c = subspace_coupling(5, sp, sch, {0, 2});
    const Real eta = std::abs(c.lambda_tilde[0] - c.lambda_tilde[1]);
    EffectiveState b0{{{5, 0}, {5, 2}}, VectorC::Zero(2), VectorR::Zero(2), 0.0};
    b0.b << 1.0, 0.0;
    const Real period = std::numbers::pi / std::abs(c.xi(0, 1));
    std::vector<Real> grid;
    for (int i = 1; i <= 20; ++i) grid.push_back(period * i / 10.0);
    const auto traj = evolve_effective(b0, c, eta, grid);
    for (const auto& st : traj) {
      const auto [bt, bs] = rwa_solution(1.0, 0.0, c.xi(0, 1), st.t);
      CHECK(std::abs(st.b[0] - bt) < 1e-8);
      CHECK(std::abs(st.b[1] - bs) < 1e-8);
    }
  }
  SUBCASE("off resonance follows the Rabi lineshape") {
    const SubspaceCoupling c = subspace_coupling(5, sp, sch, {0, 2});
    const Real xi = std::abs(c.xi(0, 1));
    const Real detuning = 10.0 * xi;
    const Real eta = std::abs(c.lambda_tilde[0] - c.lambda_tilde[1]) + detuning;
    EffectiveState b0{{{5, 0}, {5, 2}}, VectorC::Zero(2), VectorR::Zero(2), 0.0};
    b0.b << 1.0, 0.0;
    const Real omega = std::sqrt(xi * xi + detuning * detuning / 4.0);
    std::vector<Real> grid;
    for (int i = 1; i <= 400; ++i) grid.push_back(std::numbers::pi / omega * i / 200.0);
    Real best = 0.0;
    for (const auto& st : evolve_effective(b0, c, eta, grid)) best = std::max(best, std::norm(st.b[1]));
    const Real expected = xi * xi / (xi * xi + detuning * detuning / 4.0);
    CHECK(best == doctest::Approx(expected).epsilon(1e-3));
  }
  SUBCASE("norm check on the initial amplitudes") {
    const SubspaceCoupling c = subspace_coupling(5, sp, sch);
    EffectiveState b0{{{5, 0}, {5, 1}, {5, 2}}, VectorC::Ones(3), VectorR::Zero(3), 0.0};
    CHECK_THROWS_AS(evolve_effective(b0, c, 1.5, {1.0}), Error);
  }
}

TEST_CASE("state reconstruction") {
  const SystemParams p = figure1();
  const SpaceSpec s(2, 10);
  const DressedSpectrum sp = with_crt_shifts(spectrum_exact(s, p));
  EffectiveState st{{{5, 0}, {5, 1}, {5, 2}}, VectorC::Zero(3), VectorR::Zero(3), 0.0};
  st.b[0] = 1.0;
  const StateVector psi = reconstruct_state(st, sp);
  CHECK((psi.amplitudes() - sp.at({5, 0}).state.amplitudes()).norm() < 1e-14);

  const EffectiveState proj = project_onto_dressed(dicke_fock_state(s, 0, 5), sp,
                                                   {{5, 0}, {5, 1}, {5, 2}});
  CHECK(std::abs(proj.b.squaredNorm() - 1.0) < 1e-12);
  EffectiveState later = proj;
  later.t = 123.4;
  later.Phi << 0.1, -0.2, 0.3;
  CHECK(std::abs(reconstruct_state(later, sp).norm() - 1.0) < 1e-10);

  EffectiveState missing{{{40, 0}}, VectorC::Ones(1), VectorR::Zero(1), 0.0};
  CHECK_THROWS_AS(reconstruct_state(missing, sp), Error);
}

// The second-order resonance is shared by |0,4> <-> |2,2> and |1,6> <-> |3,4>.
// Exact spectra split the pair at fourth order; the splitting changes sign
// between N = 10 and N = 12, so near N = 12 both pairs stay inside one line.
TEST_CASE("shared resonance of two transition pairs beyond second order") {
  auto mismatch_over_rate = [](int N, Real coupling) {
    SystemParams p;
    p.N = N;
    p.g0 = coupling / std::sqrt(static_cast<Real>(N));
    p.Omega0 = 1.72;
    p.with_crt = false;
    const DressedSpectrum sp = spectrum_exact(SpaceSpec(N, 12), p);
    auto eta = [&](int n, int k) { return std::abs(sp.at({n, k}).lambda - sp.at({n, k + 2}).lambda); };
    CHECK(eta_resonant(4, 0, p) == doctest::Approx(eta_resonant(7, 1, p)).epsilon(1e-15));
    const Real xi = std::abs(two_photon_rate_closed_form(4, 0, p, g_drive(p)).xi);
    return std::pair{eta(4, 0) - eta(7, 1), xi};
  };
  const auto [d1, xi1] = mismatch_over_rate(3, 0.02);
  const auto [d2, xi2] = mismatch_over_rate(3, 0.04);
  CHECK(std::abs(d2 / d1) == doctest::Approx(16.0).epsilon(0.05));
  CHECK(std::abs(d2) > 10.0 * xi2);

  const auto [d10, xi10] = mismatch_over_rate(10, 0.04);
  const auto [d12, xi12] = mismatch_over_rate(12, 0.04);
  CHECK(d10 < 0.0);
  CHECK(d12 > 0.0);
  CHECK(std::abs(d12) < xi12);
}
