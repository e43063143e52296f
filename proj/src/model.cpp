#include "dicke/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <sstream>

namespace dicke {

Real SystemParams::dispersive_ratio(int n_excitations) const {
  Real fmax = 0.0;
  for (int k = 0; k < N; ++k) fmax = std::max(fmax, f_coefficient(k, N));
  return g0 * fmax * std::sqrt(static_cast<Real>(n_excitations)) / std::abs(detuning());
}

void SystemParams::validate() const {
  require(N >= 1, ErrorKind::PhysicsGuard, "qubit count must be >= 1");
  require(g0 >= 0.0, ErrorKind::PhysicsGuard, "coupling g0 must be non-negative");
  require(omega0 > 0.0, ErrorKind::PhysicsGuard, "cavity frequency must be positive");
  require(Omega0 > 0.0, ErrorKind::PhysicsGuard, "atomic frequency must be positive");
}

void RealisticParams::validate() const {
  require(!Omega.empty() && Omega.size() == g.size(), ErrorKind::PhysicsGuard,
          "realistic parameters need one Omega and one g per qubit");
  require(omega0 > 0.0, ErrorKind::PhysicsGuard, "cavity frequency must be positive");
  for (size_t l = 0; l < Omega.size(); ++l) {
    require(Omega[l] > 0.0, ErrorKind::PhysicsGuard, "atomic frequency must be positive");
    require(g[l] >= 0.0, ErrorKind::PhysicsGuard, "coupling must be non-negative");
  }
}

const char* to_string(Target target) {
  switch (target) {
    case Target::omega: return "omega";
    case Target::Omega: return "Omega";
    case Target::g: return "g";
  }
  return "?";
}

Target parse_target(const std::string& name) {
  if (name == "omega") return Target::omega;
  if (name == "Omega") return Target::Omega;
  if (name == "g") return Target::g;
  fail(ErrorKind::Configuration, "unknown modulation target '" + name + "' (omega|Omega|g)");
}

bool DissipationRates::any() const {
  if (kappa > 0.0) return true;
  for (Real r : gamma) if (r > 0.0) return true;
  for (Real r : gamma_phi) if (r > 0.0) return true;
  return false;
}

void DissipationRates::validate(int qubits) const {
  require(kappa >= 0.0, ErrorKind::PhysicsGuard, "kappa must be non-negative");
  require(gamma.empty() || static_cast<int>(gamma.size()) == qubits, ErrorKind::PhysicsGuard,
          "gamma needs one rate per qubit");
  require(gamma_phi.empty() || static_cast<int>(gamma_phi.size()) == qubits,
          ErrorKind::PhysicsGuard, "gamma_phi needs one rate per qubit");
  for (Real r : gamma) require(r >= 0.0, ErrorKind::PhysicsGuard, "gamma must be non-negative");
  for (Real r : gamma_phi)
    require(r >= 0.0, ErrorKind::PhysicsGuard, "gamma_phi must be non-negative");
}

namespace {

void check_distinct(const std::vector<ModulationSchedule>& schedules) {
  std::set<std::pair<int, int>> seen;
  for (const auto& s : schedules) {
    require(s.epsilon >= 0.0, ErrorKind::Configuration, "modulation depth must be >= 0");
    const int qubit = s.target == Target::omega ? -1 : s.qubit;
    if (!seen.insert({static_cast<int>(s.target), qubit}).second)
      fail(ErrorKind::Configuration,
           std::string("duplicate modulation target '") + to_string(s.target) + "'");
  }
}

std::string ratio_warning(const char* what, Real ratio) {
  std::ostringstream os;
  os << what << " = " << ratio << " exceeds the perturbative threshold "
     << kPerturbativeWarnRatio;
  return os.str();
}

}  // namespace

std::vector<std::string> check_schedules(const SystemParams& params,
                                         const std::vector<ModulationSchedule>& schedules) {
  check_distinct(schedules);
  std::vector<std::string> warnings;
  for (const auto& s : schedules) {
    require(s.qubit < 0, ErrorKind::Configuration,
            "per-qubit schedules need the distinguishable realistic model");
    const Real ratio = s.target == Target::g ? (params.g0 > 0 ? s.epsilon / params.g0 : 0.0)
                                             : s.epsilon / std::abs(params.detuning());
    if (ratio > kPerturbativeWarnRatio)
      warnings.push_back(ratio_warning(s.target == Target::g ? "epsilon_g/g0"
                                                             : "epsilon/|detuning|",
                                       ratio));
  }
  return warnings;
}

std::vector<std::string> check_schedules(const RealisticParams& params,
                                         const std::vector<ModulationSchedule>& schedules) {
  check_distinct(schedules);
  std::vector<std::string> warnings;
  std::optional<Real> phase;
  for (const auto& s : schedules) {
    if (s.target != Target::omega)
      require(s.qubit >= 0 && s.qubit < params.N(), ErrorKind::Configuration,
              "realistic Omega/g schedules need a valid qubit index");
    const int q = std::max(s.qubit, 0);
    const Real ratio = s.target == Target::g
                           ? (params.g[q] > 0 ? s.epsilon / params.g[q] : 0.0)
                           : s.epsilon / std::abs(params.detuning(q));
    if (ratio > kPerturbativeWarnRatio)
      warnings.push_back(ratio_warning("modulation depth ratio", ratio));
    if (s.target == Target::g) {
      if (phase && std::abs(*phase - s.phi) > 0.0)
        warnings.push_back("per-qubit modulation phases differ (experimental)");
      phase = s.phi;
    }
  }
  return warnings;
}

SparseC AffineHamiltonian::at(Real t) const {
  SparseC h = constant;
  for (const auto& term : terms) h += term.coefficient(t) * term.generator;
  return h;
}

void AffineHamiltonian::apply(Real t, const VectorC& x, VectorC& y) const {
  y.noalias() = constant * x;
  for (const auto& term : terms) {
    const Real c = term.coefficient(t);
    if (c != 0.0) y.noalias() += c * (term.generator * x);
  }
}

std::optional<Real> AffineHamiltonian::common_frequency() const {
  std::optional<Real> eta;
  for (const auto& term : terms) {
    if (term.epsilon == 0.0) continue;
    if (eta && *eta != term.eta) return std::nullopt;
    eta = term.eta;
  }
  return eta;
}

std::vector<int> coupled_subspace(const AffineHamiltonian& h, const std::vector<int>& seeds) {
  const int d = static_cast<int>(h.constant.rows());
  std::vector<char> seen(d, 0);
  std::vector<int> queue;
  for (int s : seeds) {
    require(s >= 0 && s < d, ErrorKind::Domain, "seed index outside the Hilbert space");
    if (!seen[s]) {
      seen[s] = 1;
      queue.push_back(s);
    }
  }
  auto visit = [&](const SparseC& m, int row) {
    for (SparseC::InnerIterator it(m, row); it; ++it) {
      const auto c = static_cast<int>(it.col());
      if (it.value() != Complex(0.0) && !seen[c]) {
        seen[c] = 1;
        queue.push_back(c);
      }
    }
  };
  // Row-major storage: row r lists the columns c with H(r, c) != 0, and
  // Hermiticity makes the relation symmetric.
  for (std::size_t head = 0; head < queue.size(); ++head) {
    visit(h.constant, queue[head]);
    for (const auto& term : h.terms) visit(term.generator, queue[head]);
  }
  std::sort(queue.begin(), queue.end());
  return queue;
}

namespace {

SparseC select(const SparseC& m, const std::vector<int>& indices, const std::vector<int>& position) {
  std::vector<Eigen::Triplet<Complex>> entries;
  for (std::size_t r = 0; r < indices.size(); ++r) {
    for (SparseC::InnerIterator it(m, indices[r]); it; ++it) {
      const int c = position[it.col()];
      if (c >= 0) entries.emplace_back(static_cast<int>(r), c, it.value());
    }
  }
  const auto n = static_cast<Eigen::Index>(indices.size());
  SparseC out(n, n);
  out.setFromTriplets(entries.begin(), entries.end());
  return out;
}

}  // namespace

AffineHamiltonian restrict_to(const AffineHamiltonian& h, const std::vector<int>& indices) {
  std::vector<int> position(h.constant.rows(), -1);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    require(indices[i] >= 0 && indices[i] < h.constant.rows() && position[indices[i]] < 0,
            ErrorKind::Domain, "restriction indices must be distinct and inside the space");
    position[indices[i]] = static_cast<int>(i);
  }
  AffineHamiltonian out{h.space, select(h.constant, indices, position), {}};
  for (const auto& term : h.terms) {
    ModulatedTerm t = term;
    t.generator = select(term.generator, indices, position);
    out.terms.push_back(std::move(t));
  }
  return out;
}

SparseC coupling_operator(const OperatorSet& ops, bool with_crt) {
  const SpaceSpec& s = ops.space;
  SparseC c(s.dim(), s.dim());
  if (s.basis == BasisKind::Distinguishable) {
    for (int l = 0; l < s.N; ++l) c += qubit_coupling_operator(ops, l, with_crt);
    return c;
  }
  for (int k = 0; k < s.N; ++k) {
    const Real f = f_coefficient(k, s.N);
    const SparseC& up = ops.sigma[k + 1][k];
    const SparseC& down = ops.sigma[k][k + 1];
    if (with_crt) {
      const SparseC field = ops.a + ops.a_dag;
      c += f * SparseC(field * SparseC(up + down));
    } else {
      c += f * SparseC(ops.a * up + ops.a_dag * down);
    }
  }
  return c;
}

SparseC qubit_coupling_operator(const OperatorSet& ops, int qubit, bool with_crt) {
  require(ops.space.basis == BasisKind::Distinguishable, ErrorKind::Domain,
          "per-qubit coupling needs the distinguishable basis");
  const SparseC& up = ops.sigma_plus.at(qubit);
  const SparseC& down = ops.sigma_minus.at(qubit);
  if (with_crt) return SparseC((ops.a + ops.a_dag) * SparseC(up + down));
  return SparseC(ops.a * up + ops.a_dag * down);
}

namespace {

void check_space(const SpaceSpec& space, int N) {
  if (space.N != N) {
    std::ostringstream os;
    os << "space has N = " << space.N << " but parameters have N = " << N;
    fail(ErrorKind::Domain, os.str());
  }
}

SparseC generator_for(Target target, const OperatorSet& ops, bool with_crt) {
  switch (target) {
    case Target::omega: return ops.n;
    case Target::Omega: return ops.excitations;
    case Target::g: return coupling_operator(ops, with_crt);
  }
  return {};
}

}  // namespace

SparseC hamiltonian_static(const SpaceSpec& space, const SystemParams& params) {
  check_space(space, params.N);
  const OperatorSet ops = build_operators(space);
  SparseC h = params.omega0 * ops.n + params.Omega0 * ops.excitations;
  if (params.g0 != 0.0) h += params.g0 * coupling_operator(ops, params.with_crt);
  return h;
}

AffineHamiltonian hamiltonian_affine(const SpaceSpec& space, const SystemParams& params,
                                     const std::vector<ModulationSchedule>& schedules) {
  check_space(space, params.N);
  check_schedules(params, schedules);
  const OperatorSet ops = build_operators(space);
  AffineHamiltonian h;
  h.space = space;
  h.constant = params.omega0 * ops.n + params.Omega0 * ops.excitations;
  if (params.g0 != 0.0) h.constant += params.g0 * coupling_operator(ops, params.with_crt);
  for (const auto& s : schedules) {
    if (s.epsilon == 0.0) continue;
    h.terms.push_back({generator_for(s.target, ops, params.with_crt), s.epsilon, s.eta, s.phi});
  }
  return h;
}

SparseC hamiltonian_at(const SpaceSpec& space, const SystemParams& params,
                       const std::vector<ModulationSchedule>& schedules, Real t) {
  return hamiltonian_affine(space, params, schedules).at(t);
}

AffineHamiltonian realistic_affine(const SpaceSpec& space, const RealisticParams& params,
                                   const std::vector<ModulationSchedule>& schedules) {
  params.validate();
  require(params.N() == 2, ErrorKind::Unsupported,
          "the realistic per-qubit model is restricted to two qubits");
  require(space.basis == BasisKind::Distinguishable, ErrorKind::Domain,
          "the realistic model needs the distinguishable basis");
  check_space(space, params.N());
  check_schedules(params, schedules);

  const OperatorSet ops = build_operators(space);
  AffineHamiltonian h;
  h.space = space;
  h.constant = params.omega0 * ops.n;
  for (int l = 0; l < params.N(); ++l) {
    h.constant += (0.5 * params.Omega[l]) * ops.sigma_z[l];
    if (params.g[l] != 0.0)
      h.constant += params.g[l] * qubit_coupling_operator(ops, l, params.with_crt);
  }
  for (const auto& s : schedules) {
    if (s.epsilon == 0.0) continue;
    SparseC gen;
    switch (s.target) {
      case Target::omega: gen = ops.n; break;
      case Target::Omega: gen = 0.5 * ops.sigma_z[s.qubit]; break;
      case Target::g: gen = qubit_coupling_operator(ops, s.qubit, params.with_crt); break;
    }
    h.terms.push_back({std::move(gen), s.epsilon, s.eta, s.phi});
  }
  return h;
}

SparseC hamiltonian_realistic_at(const SpaceSpec& space, const RealisticParams& params,
                                 const std::vector<ModulationSchedule>& schedules, Real t) {
  return realistic_affine(space, params, schedules).at(t);
}

Real UnitSystem::to_microseconds(Real t) const {
  return t / (2.0 * std::numbers::pi * omega0_over_2pi_hz) * 1e6;
}

Real UnitSystem::from_microseconds(Real t_us) const {
  return t_us * 1e-6 * 2.0 * std::numbers::pi * omega0_over_2pi_hz;
}

Real max_abs(const SparseC& m) {
  Real v = 0.0;
  for (int r = 0; r < m.outerSize(); ++r)
    for (SparseC::InnerIterator it(m, r); it; ++it) v = std::max(v, std::abs(it.value()));
  return v;
}

Real hermiticity_defect(const SparseC& m) {
  return max_abs(SparseC(m - SparseC(m.adjoint())));
}

}  // namespace dicke
