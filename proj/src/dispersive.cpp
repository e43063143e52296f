#include "dicke/dispersive.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "dicke/integrator.hpp"

namespace dicke {

namespace {

void require_collective(const SpaceSpec& space, const char* what) {
  require(space.basis == BasisKind::Collective, ErrorKind::Unsupported,
          std::string(what) + " needs the collective Dicke basis");
}

Real sign_of(Real x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

// Rotates a vector so that its largest-magnitude component is real positive.
void fix_phase(VectorC& v) {
  Eigen::Index arg = 0;
  v.cwiseAbs().maxCoeff(&arg);
  const Complex c = v[arg];
  if (std::abs(c) > 0.0) v *= std::conj(c) / std::abs(c);
}

std::string label_text(int m, int S) {
  std::ostringstream os;
  os << "(m=" << m << ", S=" << S << ")";
  return os.str();
}

const ModulationSchedule* schedule_for(const std::vector<ModulationSchedule>& schedules,
                                       Target target) {
  for (const auto& s : schedules)
    if (s.target == target && s.qubit < 0) return &s;
  return nullptr;
}

Complex braket(const StateVector& bra, const SparseC& op, const StateVector& ket) {
  const VectorC applied = op * ket.amplitudes();
  return bra.amplitudes().dot(applied);
}

// Sum_k f_k a sigma_{k,k+1}: removes one photon and one atomic excitation.
SparseC crt_lowering(const OperatorSet& ops) {
  const int N = ops.space.N;
  SparseC out(ops.space.dim(), ops.space.dim());
  for (int k = 0; k < N; ++k)
    out += f_coefficient(k, N) * SparseC(ops.a * ops.sigma[k][k + 1]);
  return out;
}

void check_same_subspace(const DressedSpectrum& spectrum, int m, int T, int S) {
  require(spectrum.find({m, T}) != nullptr && spectrum.find({m, S}) != nullptr,
          ErrorKind::Domain,
          "dressed labels " + label_text(m, T) + " / " + label_text(m, S) + " not in spectrum");
}

}  // namespace

const DressedEntry* DressedSpectrum::find(DressedLabel label) const {
  for (const auto& e : entries)
    if (e.label == label) return &e;
  return nullptr;
}

const DressedEntry& DressedSpectrum::at(DressedLabel label) const {
  const DressedEntry* e = find(label);
  if (!e) fail(ErrorKind::Domain, "no dressed entry " + label_text(label.m, label.S));
  return *e;
}

std::vector<int> DressedSpectrum::labels(int m) const {
  std::vector<int> out;
  for (const auto& e : entries)
    if (e.label.m == m) out.push_back(e.label.S);
  std::sort(out.begin(), out.end());
  return out;
}

int DressedSpectrum::max_m() const {
  int best = -1;
  for (const auto& e : entries) best = std::max(best, e.label.m);
  return best;
}

Real lambda_perturbative(int n, int k, const SystemParams& params) {
  require(n >= 0 && k >= 0 && k <= std::min(n, params.N), ErrorKind::Domain,
          "lambda_perturbative needs 0 <= k <= min(n, N)");
  const Real delta = params.detuning();
  require(delta != 0.0, ErrorKind::Domain, "resonant qubits: dispersive shift undefined");
  const Real d = params.dispersive_shift();
  const int N = params.N;
  return n * params.omega0 - k * delta +
         d * (static_cast<Real>(N - k) * (n - 2 * k) - static_cast<Real>(k) * (n - k + 1));
}

StateVector dressed_state_perturbative(const SpaceSpec& space, int n, int k,
                                       const SystemParams& params) {
  require_collective(space, "dressed_state_perturbative");
  require(space.N == params.N, ErrorKind::Domain, "space and parameters disagree on N");
  require(n <= space.n_max, ErrorKind::Cutoff, "excitation number exceeds the Fock cutoff");
  require(n >= 0 && k >= 0 && k <= std::min(n, params.N), ErrorKind::Domain,
          "dressed_state_perturbative needs 0 <= k <= min(n, N)");
  const Real delta = params.detuning();
  require(delta != 0.0, ErrorKind::Domain, "resonant qubits: dispersive expansion undefined");
  const Real g = params.g0;
  const int N = params.N;
  const int K = n - k;
  const int top = std::min(n, N);
  auto f = [N](int j) { return j >= 0 && j < N ? f_coefficient(j, N) : 0.0; };

  VectorC amp = VectorC::Zero(space.dim());
  auto put = [&](int atomic, Real value) {
    if (atomic < 0 || atomic > top) return;
    amp[space.index(atomic, n - atomic)] += value;
  };
  put(k, 1.0);
  put(k + 1, g * f(k) * std::sqrt(static_cast<Real>(K)) / delta);
  put(k - 1, -g * f(k - 1) * std::sqrt(static_cast<Real>(K + 1)) / delta);
  put(k + 2, g * g * f(k) * f(k + 1) * std::sqrt(static_cast<Real>(K) * (K - 1)) /
                 (2.0 * delta * delta));
  put(k - 2, g * g * f(k - 1) * f(k - 2) * std::sqrt(static_cast<Real>(K + 1) * (K + 2)) /
                 (2.0 * delta * delta));
  return StateVector(space, amp).normalized();
}

DressedSpectrum spectrum_exact(const SpaceSpec& space, const SystemParams& params) {
  require_collective(space, "spectrum_exact");
  require(space.N == params.N, ErrorKind::Domain, "space and parameters disagree on N");
  params.validate();

  DressedSpectrum out;
  out.space = space;
  out.params = params;
  out.source = SpectrumSource::ExactDiagonalization;
  out.with_crt = params.with_crt;
  const int N = params.N;

  if (!params.with_crt) {
    for (int m = 0; m <= space.n_max; ++m) {
      const int top = std::min(m, N);
      MatrixR block = MatrixR::Zero(top + 1, top + 1);
      for (int k = 0; k <= top; ++k) {
        block(k, k) = params.omega0 * (m - k) + params.Omega0 * k;
        if (k < top) {
          const Real c = params.g0 * f_coefficient(k, N) * std::sqrt(static_cast<Real>(m - k));
          block(k, k + 1) = c;
          block(k + 1, k) = c;
        }
      }
      Eigen::SelfAdjointEigenSolver<MatrixR> solver(block);
      std::vector<bool> used(top + 1, false);
      for (int j = 0; j <= top; ++j) {
        Eigen::Index k_dom = 0;
        const Real best = solver.eigenvectors().col(j).cwiseAbs2().maxCoeff(&k_dom);
        if (best <= 0.5 || used[k_dom]) {
          std::ostringstream os;
          os << "ambiguous dressed-state labelling in subspace m=" << m
             << " (max overlap " << best << ")";
          fail(ErrorKind::Labeling, os.str());
        }
        used[k_dom] = true;
        VectorC amp = VectorC::Zero(space.dim());
        for (int k = 0; k <= top; ++k)
          amp[space.index(k, m - k)] = solver.eigenvectors()(k, j);
        fix_phase(amp);
        out.entries.push_back(DressedEntry{{m, static_cast<int>(k_dom)},
                                           solver.eigenvalues()[j], 0.0, best,
                                           StateVector(space, amp)});
      }
    }
  } else {
    const MatrixC h = MatrixC(hamiltonian_static(space, params));
    Eigen::SelfAdjointEigenSolver<MatrixC> solver(h);
    std::vector<bool> used(space.dim(), false);
    for (int j = 0; j < space.dim(); ++j) {
      Eigen::Index idx = 0;
      const Real best = solver.eigenvectors().col(j).cwiseAbs2().maxCoeff(&idx);
      const int k = space.atomic_of(static_cast<int>(idx));
      const int m = k + space.photon_of(static_cast<int>(idx));
      if (m > space.n_max) continue;  // incomplete subspace near the cutoff
      if (best <= 0.5 || used[idx]) {
        std::ostringstream os;
        os << "ambiguous dressed-state labelling in subspace m=" << m << " (max overlap "
           << best << ")";
        fail(ErrorKind::Labeling, os.str());
      }
      used[idx] = true;
      VectorC amp = solver.eigenvectors().col(j);
      fix_phase(amp);
      out.entries.push_back(
          DressedEntry{{m, k}, solver.eigenvalues()[j], 0.0, best, StateVector(space, amp)});
    }
    for (int m = 0; m <= space.n_max; ++m) {
      if (static_cast<int>(out.labels(m).size()) != std::min(m, N) + 1) {
        fail(ErrorKind::Labeling,
             "subspace m=" + std::to_string(m) + " is incomplete after labelling");
      }
    }
  }
  std::sort(out.entries.begin(), out.entries.end(), [](const auto& a, const auto& b) {
    return a.label.m != b.label.m ? a.label.m < b.label.m : a.label.S < b.label.S;
  });
  return out;
}

DressedSpectrum spectrum_perturbative(const SpaceSpec& space, const SystemParams& params) {
  require_collective(space, "spectrum_perturbative");
  params.validate();
  DressedSpectrum out;
  out.space = space;
  out.params = params;
  out.source = SpectrumSource::SecondOrderPerturbation;
  out.with_crt = false;
  for (int m = 0; m <= space.n_max; ++m) {
    for (int k = 0; k <= std::min(m, params.N); ++k) {
      out.entries.push_back(DressedEntry{{m, k}, lambda_perturbative(m, k, params), 0.0, 1.0,
                                         dressed_state_perturbative(space, m, k, params)});
    }
  }
  return out;
}

namespace {

struct CrtTerms {
  Real shift = 0.0;
  Real max_coupling = 0.0;
};

CrtTerms crt_terms(int m, int T, const DressedSpectrum& spectrum, const SystemParams& params) {
  require(!spectrum.with_crt, ErrorKind::Domain,
          "counter-rotating shift needs a rotating-wave spectrum");
  require_collective(spectrum.space, "crt_shift");
  if (m + 2 > spectrum.max_m()) {
    std::ostringstream os;
    os << "counter-rotating shift of subspace " << m << " needs subspace " << m + 2
       << " but the Fock cutoff stops at " << spectrum.max_m();
    fail(ErrorKind::Cutoff, os.str());
  }
  const DressedEntry& self = spectrum.at({m, T});
  const OperatorSet ops = build_operators(spectrum.space);
  const SparseC lower = crt_lowering(ops);
  const Real g = params.g0;

  CrtTerms out;
  auto guard = [&](Real denominator, int mm, int S) {
    if (std::abs(denominator) < 1e-9) {
      fail(ErrorKind::PhysicsGuard, "counter-rotating shift denominator vanishes between " +
                                        label_text(m, T) + " and " + label_text(mm, S));
    }
  };
  if (m >= 2) {
    for (int S : spectrum.labels(m - 2)) {
      const DressedEntry& below = spectrum.at({m - 2, S});
      const Complex c = braket(below.state, lower, self.state);
      const Real denominator = self.lambda - below.lambda;
      if (std::norm(c) == 0.0) continue;
      guard(denominator, m - 2, S);
      out.shift += g * g * std::norm(c) / denominator;
      out.max_coupling = std::max(out.max_coupling, g * std::abs(c));
    }
  }
  for (int S : spectrum.labels(m + 2)) {
    const DressedEntry& above = spectrum.at({m + 2, S});
    const Complex c = braket(self.state, lower, above.state);
    const Real denominator = above.lambda - self.lambda;
    if (std::norm(c) == 0.0) continue;
    guard(denominator, m + 2, S);
    out.shift -= g * g * std::norm(c) / denominator;
    out.max_coupling = std::max(out.max_coupling, g * std::abs(c));
  }
  return out;
}

}  // namespace

Real crt_shift(int m, int T, const DressedSpectrum& spectrum_tc, const SystemParams& params) {
  return crt_terms(m, T, spectrum_tc, params).shift;
}

Real crt_validity_ratio(int m, int T, const DressedSpectrum& spectrum_tc,
                        const SystemParams& params) {
  const Real gap = params.omega0 - std::abs(params.detuning());
  require(gap > 0.0, ErrorKind::PhysicsGuard, "|detuning| reaches the cavity frequency");
  return crt_terms(m, T, spectrum_tc, params).max_coupling / gap;
}

DressedSpectrum with_crt_shifts(const DressedSpectrum& spectrum_tc) {
  DressedSpectrum out = spectrum_tc;
  const int top = spectrum_tc.max_m() - 2;
  out.entries.clear();
  for (const auto& e : spectrum_tc.entries) {
    if (e.label.m > top) continue;
    DressedEntry copy = e;
    copy.nu = crt_shift(e.label.m, e.label.S, spectrum_tc, spectrum_tc.params);
    out.entries.push_back(std::move(copy));
  }
  out.has_crt_shifts = true;
  return out;
}

Complex upsilon(Target target, int k, int m, int T, int S, const DressedSpectrum& spectrum,
                const std::vector<ModulationSchedule>& schedules) {
  const ModulationSchedule* sched = schedule_for(schedules, target);
  if (!sched || sched->epsilon == 0.0) return {0.0, 0.0};
  const int N = spectrum.space.N;
  require(k >= 0 && k <= N, ErrorKind::Domain, "Dicke index out of range");
  const DressedEntry& bra = spectrum.at({m, T});
  const DressedEntry& ket = spectrum.at({m, S});
  const OperatorSet ops = build_operators(spectrum.space);
  switch (target) {
    case Target::omega:
      if (k != 0) return {0.0, 0.0};
      return sched->epsilon * braket(bra.state, ops.n, ket.state);
    case Target::Omega:
      return sched->epsilon * static_cast<Real>(k) * braket(bra.state, ops.sigma[k][k], ket.state);
    case Target::g: {
      if (k >= N) return {0.0, 0.0};
      const SparseC op = SparseC(ops.a * ops.sigma[k + 1][k]) +
                         SparseC(ops.a_dag * ops.sigma[k][k + 1]);
      return sched->epsilon * f_coefficient(k, N) * braket(bra.state, op, ket.state);
    }
  }
  return {0.0, 0.0};
}

namespace {

// Sum over k of Upsilon^{L,k}_{T,S} for each modulated target, using the
// generators directly: omega -> n, Omega -> sum_k k sigma_kk, g -> TC coupling.
struct UpsilonSums {
  std::vector<Complex> value;  // per schedule
  std::vector<Real> phase;
};

struct Generators {
  SparseC n, excitations, coupling;

  explicit Generators(const SpaceSpec& space) {
    const OperatorSet ops = build_operators(space);
    n = ops.n;
    excitations = ops.excitations;
    coupling = coupling_operator(ops, false);
  }

  const SparseC& of(Target t) const {
    switch (t) {
      case Target::omega: return n;
      case Target::Omega: return excitations;
      case Target::g: return coupling;
    }
    return n;
  }
};

UpsilonSums upsilon_sums(const Generators& gen, const StateVector& bra, const StateVector& ket,
                         const std::vector<ModulationSchedule>& schedules) {
  UpsilonSums out;
  for (const auto& s : schedules) {
    require(s.qubit < 0, ErrorKind::Unsupported,
            "per-qubit schedules have no collective dispersive description");
    out.value.push_back(s.epsilon == 0.0 ? Complex{0.0, 0.0}
                                         : s.epsilon * braket(bra, gen.of(s.target), ket));
    out.phase.push_back(s.phi);
  }
  return out;
}

Complex xi_from_sums(const UpsilonSums& sums, Real s) {
  Complex total{0.0, 0.0};
  for (std::size_t i = 0; i < sums.value.size(); ++i)
    total += sums.value[i] * std::exp(Complex(0.0, -s * sums.phase[i]));
  return 0.5 * s * total;
}

Real common_eta(const std::vector<ModulationSchedule>& schedules) {
  Real eta = schedules.empty() ? 0.0 : schedules.front().eta;
  for (const auto& s : schedules) {
    require(std::abs(s.eta - eta) <= 1e-12 * std::abs(eta), ErrorKind::Unsupported,
            "dispersive phases need one common modulation frequency");
  }
  return eta;
}

}  // namespace

TransitionRate transition_rate_general(int n, int T, int S, const DressedSpectrum& spectrum,
                                       const std::vector<ModulationSchedule>& schedules) {
  require(T != S, ErrorKind::Domain, "transition rate needs two different labels");
  check_same_subspace(spectrum, n, T, S);
  const DressedEntry& eT = spectrum.at({n, T});
  const DressedEntry& eS = spectrum.at({n, S});
  const Real diff = eT.lambda_tilde() - eS.lambda_tilde();
  if (std::abs(diff) < 1e-12) {
    fail(ErrorKind::Degeneracy, "degenerate dressed levels " + label_text(n, T) + " and " +
                                    label_text(n, S));
  }
  const Generators gen(spectrum.space);
  const Real s = sign_of(diff);
  TransitionRate out;
  out.n = n;
  out.from_label = T;
  out.to_label = S;
  out.xi = xi_from_sums(upsilon_sums(gen, eT.state, eS.state, schedules), s);
  out.eta_res = std::abs(diff);
  return out;
}

TransitionRate two_photon_rate_closed_form(int n, int k, const SystemParams& params,
                                           const std::vector<ModulationSchedule>& schedules) {
  TransitionRate out;
  out.n = n;
  out.from_label = k;
  out.to_label = k + 2;
  const int N = params.N;
  const int K = n - k;
  require(k >= 0 && n >= 0, ErrorKind::Domain, "negative excitation or Dicke index");
  const Real delta = params.detuning();
  require(delta != 0.0, ErrorKind::Domain, "resonant qubits: closed-form rate undefined");
  out.eta_res = eta_resonant(n, k, params);
  if (k + 2 > N || K < 2) return out;

  const Real D = sign_of(delta);
  const Real g = params.g0;
  const Real radicand = static_cast<Real>(N - k) * (N - k - 1) * (k + 1) * (k + 2) *
                        static_cast<Real>(K) * (K - 1);
  Complex bracket{0.0, 0.0};
  auto phase = [D](Real phi) { return std::exp(Complex(0.0, -D * phi)); };
  if (const auto* s = schedule_for(schedules, Target::omega)) bracket += s->epsilon * phase(s->phi) / delta;
  if (const auto* s = schedule_for(schedules, Target::Omega)) bracket -= s->epsilon * phase(s->phi) / delta;
  if (const auto* s = schedule_for(schedules, Target::g); s && s->epsilon != 0.0) {
    require(g > 0.0, ErrorKind::Domain, "coupling modulation needs g0 > 0");
    bracket -= s->epsilon * phase(s->phi) / g;
  }
  out.xi = D * g * std::pow(g / delta, 3) * std::sqrt(radicand) * bracket;
  return out;
}

Real eta_resonant(int n, int k, const SystemParams& params) {
  const Real delta = params.detuning();
  return 2.0 * std::abs(delta + params.dispersive_shift() * (2.0 * params.N + 2.0 * n -
                                                             6.0 * k - 5.0));
}

Real phase_Phi(int m, int S, Real t, const DressedSpectrum& spectrum,
               const std::vector<ModulationSchedule>& schedules) {
  if (schedules.empty()) return 0.0;
  const Real eta = common_eta(schedules);
  require(eta != 0.0, ErrorKind::Domain, "phase Phi needs a nonzero modulation frequency");
  const DressedEntry& e = spectrum.at({m, S});
  const Generators gen(spectrum.space);
  const UpsilonSums sums = upsilon_sums(gen, e.state, e.state, schedules);
  Real phi = 0.0;
  for (std::size_t i = 0; i < sums.value.size(); ++i)
    phi += sums.value[i].real() / eta *
           (std::cos(eta * t + sums.phase[i]) - std::cos(sums.phase[i]));
  return phi;
}

SubspaceCoupling subspace_coupling(int n, const DressedSpectrum& spectrum,
                                   const std::vector<ModulationSchedule>& schedules,
                                   std::vector<int> labels) {
  if (labels.empty()) labels = spectrum.labels(n);
  require(!labels.empty(), ErrorKind::Domain, "no dressed states in subspace " + std::to_string(n));
  const Generators gen(spectrum.space);
  const auto count = static_cast<Eigen::Index>(labels.size());

  SubspaceCoupling out;
  out.n = n;
  out.labels = labels;
  out.xi = MatrixC::Zero(count, count);
  out.diagonal_upsilon = MatrixR::Zero(count, static_cast<Eigen::Index>(schedules.size()));
  for (const auto& s : schedules) out.schedule_phases.push_back(s.phi);
  for (int label : labels) out.lambda_tilde.push_back(spectrum.at({n, label}).lambda_tilde());

  for (Eigen::Index i = 0; i < count; ++i) {
    const StateVector& si = spectrum.at({n, labels[i]}).state;
    const UpsilonSums diag = upsilon_sums(gen, si, si, schedules);
    for (std::size_t j = 0; j < diag.value.size(); ++j)
      out.diagonal_upsilon(i, static_cast<Eigen::Index>(j)) = diag.value[j].real();
    for (Eigen::Index j = 0; j < count; ++j) {
      if (i == j) continue;
      const Real diff = out.lambda_tilde[i] - out.lambda_tilde[j];
      if (std::abs(diff) < 1e-12) {
        fail(ErrorKind::Degeneracy, "degenerate dressed levels " + label_text(n, labels[i]) +
                                        " and " + label_text(n, labels[j]));
      }
      const StateVector& sj = spectrum.at({n, labels[j]}).state;
      out.xi(i, j) = xi_from_sums(upsilon_sums(gen, si, sj, schedules), sign_of(diff));
    }
  }
  return out;
}

EffectiveState project_onto_dressed(const StateVector& psi, const DressedSpectrum& spectrum,
                                    std::vector<DressedLabel> labels) {
  require(psi.space() == spectrum.space, ErrorKind::Domain,
          "state and spectrum live on different spaces");
  if (labels.empty())
    for (const auto& e : spectrum.entries) labels.push_back(e.label);
  EffectiveState out;
  out.labels = labels;
  out.b.resize(static_cast<Eigen::Index>(labels.size()));
  out.Phi = VectorR::Zero(static_cast<Eigen::Index>(labels.size()));
  for (std::size_t i = 0; i < labels.size(); ++i)
    out.b[static_cast<Eigen::Index>(i)] =
        spectrum.at(labels[i]).state.amplitudes().dot(psi.amplitudes());
  return out;
}

std::vector<EffectiveState> evolve_effective(const EffectiveState& b0,
                                             const SubspaceCoupling& coupling, Real eta,
                                             const std::vector<Real>& t_grid, Real tol) {
  const auto count = static_cast<Eigen::Index>(coupling.labels.size());
  require(b0.b.size() == count && b0.labels.size() == coupling.labels.size(), ErrorKind::Domain,
          "initial amplitudes do not match the subspace labels");
  for (std::size_t i = 0; i < b0.labels.size(); ++i) {
    require(b0.labels[i].m == coupling.n && b0.labels[i].S == coupling.labels[i],
            ErrorKind::Domain, "initial amplitudes do not match the subspace labels");
  }
  require(std::abs(b0.b.squaredNorm() - 1.0) <= 1e-8, ErrorKind::Normalization,
          "initial slow amplitudes are not normalized");
  require(std::is_sorted(t_grid.begin(), t_grid.end()), ErrorKind::Domain,
          "time grid must be nondecreasing");

  // detuning(i, j) = s_ij (|lambda~_i - lambda~_j| - eta)
  MatrixR detuning = MatrixR::Zero(count, count);
  for (Eigen::Index i = 0; i < count; ++i)
    for (Eigen::Index j = 0; j < count; ++j)
      if (i != j) {
        const Real diff = coupling.lambda_tilde[i] - coupling.lambda_tilde[j];
        detuning(i, j) = sign_of(diff) * (std::abs(diff) - eta);
      }

  auto rhs = [&](double t, const VectorC& y, VectorC& dy) {
    dy.setZero(count);
    for (Eigen::Index i = 0; i < count; ++i)
      for (Eigen::Index j = 0; j < count; ++j)
        if (i != j && coupling.xi(i, j) != Complex(0.0, 0.0))
          dy[i] += coupling.xi(i, j) * std::exp(Complex(0.0, t * detuning(i, j))) * y[j];
  };
  StepperOptions sopts;
  sopts.rtol = tol;
  sopts.atol = tol;
  DormandPrince<VectorC> stepper(rhs, sopts);

  auto phases = [&](Real t) {
    VectorR phi = VectorR::Zero(count);
    if (eta == 0.0) return phi;
    for (Eigen::Index i = 0; i < count; ++i)
      for (Eigen::Index L = 0; L < coupling.diagonal_upsilon.cols(); ++L) {
        const Real p = coupling.schedule_phases[static_cast<std::size_t>(L)];
        phi[i] += coupling.diagonal_upsilon(i, L) / eta * (std::cos(eta * t + p) - std::cos(p));
      }
    return phi;
  };

  std::vector<EffectiveState> out;
  out.reserve(t_grid.size());
  double t = b0.t;
  VectorC y = b0.b;
  for (Real target : t_grid) {
    require(target >= t, ErrorKind::Domain, "time grid starts before the initial state");
    try {
      stepper.integrate(t, y, target);
    } catch (const Error& e) {
      std::ostringstream os;
      os << "effective evolution failed: " << e.what() << " (steps "
         << stepper.stats().steps << ", rejected " << stepper.stats().rejected << ")";
      fail(ErrorKind::Numeric, os.str());
    }
    const Real drift = std::abs(y.squaredNorm() - 1.0);
    if (drift > 1e-8) {
      std::ostringstream os;
      os << "effective evolution lost normalization (drift " << drift << " at t = " << t << ")";
      fail(ErrorKind::Numeric, os.str());
    }
    out.push_back(EffectiveState{b0.labels, y, phases(target), target});
  }
  return out;
}

std::pair<Complex, Complex> rwa_solution(Complex b_T0, Complex b_S0, Complex xi, Real t) {
  const Real r = std::abs(xi);
  if (r == 0.0) return {b_T0, b_S0};
  const Complex u = xi / r;
  const Real c = std::cos(r * t);
  const Real s = std::sin(r * t);
  return {b_T0 * c + u * b_S0 * s, b_S0 * c - std::conj(u) * b_T0 * s};
}

StateVector reconstruct_state(const EffectiveState& state, const DressedSpectrum& spectrum) {
  require(state.b.size() == static_cast<Eigen::Index>(state.labels.size()), ErrorKind::Domain,
          "amplitude count does not match labels");
  VectorC psi = VectorC::Zero(spectrum.space.dim());
  for (std::size_t i = 0; i < state.labels.size(); ++i) {
    const auto idx = static_cast<Eigen::Index>(i);
    const DressedEntry& e = spectrum.at(state.labels[i]);
    const Real phi = state.Phi.size() == state.b.size() ? state.Phi[idx] : 0.0;
    psi += std::exp(Complex(0.0, phi - state.t * e.lambda_tilde())) * state.b[idx] *
           e.state.amplitudes();
  }
  return StateVector(spectrum.space, psi).normalized();
}

}  // namespace dicke
