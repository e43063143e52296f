#include "dicke/dynamics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>
#include <optional>
#include <sstream>

#include <Eigen/SVD>

namespace dicke {

DensityMatrix::DensityMatrix(SpaceSpec space, MatrixC matrix)
    : space_(space), matrix_(std::move(matrix)) {
  require(matrix_.rows() == space_.dim() && matrix_.cols() == space_.dim(), ErrorKind::Domain,
          "density matrix dimension does not match the space");
}

DensityMatrix DensityMatrix::pure(const StateVector& psi) {
  return DensityMatrix(psi.space(), psi.amplitudes() * psi.amplitudes().adjoint());
}

Real DensityMatrix::purity() const { return (matrix_ * matrix_).trace().real(); }

Real DensityMatrix::hermiticity_defect() const {
  return (matrix_ - matrix_.adjoint()).cwiseAbs().maxCoeff();
}

Real DensityMatrix::min_eigenvalue() const {
  Eigen::SelfAdjointEigenSolver<MatrixC> es(matrix_, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

std::vector<Real> Trajectory::series(const std::string& selector) const {
  std::vector<Real> out;
  out.reserve(times.size());
  const auto colon = selector.find(':');
  const std::string head = selector.substr(0, colon);
  int idx = -1;
  if (colon != std::string::npos) {
    const std::string tail = selector.substr(colon + 1);
    const auto [ptr, ec] = std::from_chars(tail.data(), tail.data() + tail.size(), idx);
    require(ec == std::errc() && ptr == tail.data() + tail.size() && idx >= 0, ErrorKind::Configuration,
            "bad index in observable selector '" + selector + "'");
  }
  auto in_range = [&](std::size_t size) {
    require(idx >= 0 && static_cast<std::size_t>(idx) < size, ErrorKind::Configuration,
            "observable selector '" + selector + "' is out of range");
    return static_cast<std::size_t>(idx);
  };
  for (size_t s = 0; s < times.size(); ++s) {
    const ObservableSet& o = observables[s];
    if (head == "n_ph") out.push_back(o.n_ph);
    else if (head == "n_at") out.push_back(o.n_at);
    else if (head == "p_ph") out.push_back(o.p_ph[in_range(o.p_ph.size())]);
    else if (head == "p_at") out.push_back(o.p_at[in_range(o.p_at.size())]);
    else if (head == "tracked") out.push_back(tracked[s][in_range(tracked[s].size())]);
    else if (head == "purity") {
      require(s < purity.size(), ErrorKind::Configuration, "purity is recorded by Lindblad runs only");
      out.push_back(purity[s]);
    } else {
      fail(ErrorKind::Configuration, "unknown observable selector '" + selector + "'");
    }
  }
  return out;
}

namespace {

constexpr Complex kI{0.0, 1.0};

// Row-major storage lets sparse * dense products vectorize along rows.
using MatrixRM = Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

void check_tol(Real tol) {
  require(tol >= 1e-13 && tol <= 1e-6, ErrorKind::Configuration,
          "integrator tolerance must lie in [1e-13, 1e-6]");
}

Real step_cap(const AffineHamiltonian& h) {
  Real cap = std::numeric_limits<Real>::infinity();
  for (const auto& term : h.terms)
    if (term.eta > 0.0) cap = std::min(cap, 2.0 * std::numbers::pi / term.eta / 20.0);
  return cap;
}

// Static diagonal, the rotating-frame energies.
VectorR frame_energies(const AffineHamiltonian& h) {
  return VectorC(h.constant.diagonal()).real();
}

SparseC without_diagonal(const SparseC& m, const VectorR& e) {
  SparseC diag(m.rows(), m.cols());
  diag.reserve(Eigen::VectorXi::Constant(m.rows(), 1));
  for (int i = 0; i < m.rows(); ++i) diag.insert(i, i) = e[i];
  SparseC out = m - diag;
  out.prune(Complex(0.0), 0.0);
  return out;
}

// Plain complex product without the inf/nan recovery of operator*.
inline Complex cmul(Complex a, Complex b) {
  return {a.real() * b.real() - a.imag() * b.imag(), a.real() * b.imag() + a.imag() * b.real()};
}

VectorC phases(const VectorR& e, Real t) {
  VectorC u(e.size());
  for (int i = 0; i < e.size(); ++i) u[i] = std::polar(1.0, -e[i] * t);
  return u;
}

// Applies H(t) - diag(E).  All operators are merged onto one sparsity
// pattern so each call is a single sparse product with values refreshed in
// place.
struct FramedHamiltonian {
  const AffineHamiltonian& h;
  VectorR energies;
  bool rotating;
  mutable SparseC current;
  std::vector<Complex> base;
  std::vector<std::vector<std::pair<int, Complex>>> term_entries;

  FramedHamiltonian(const AffineHamiltonian& ham, Frame frame)
      : h(ham), rotating(frame == Frame::Interaction) {
    energies = rotating ? frame_energies(ham) : VectorR::Zero(ham.constant.rows());
    const SparseC shifted = rotating ? without_diagonal(ham.constant, energies) : ham.constant;

    const auto d = ham.constant.rows();
    std::vector<Eigen::Triplet<Complex>> pattern;
    auto add_pattern = [&](const SparseC& m) {
      for (int r = 0; r < m.outerSize(); ++r)
        for (SparseC::InnerIterator it(m, r); it; ++it) pattern.emplace_back(r, it.col(), 0.0);
    };
    add_pattern(shifted);
    for (const auto& term : ham.terms) add_pattern(term.generator);
    current.resize(d, d);
    current.setFromTriplets(pattern.begin(), pattern.end());
    current.makeCompressed();

    base.assign(current.nonZeros(), 0.0);
    for (const auto& [pos, v] : positions(shifted)) base[pos] += v;
    for (const auto& term : ham.terms) term_entries.push_back(positions(term.generator));
  }

  std::vector<std::pair<int, Complex>> positions(const SparseC& m) const {
    std::vector<std::pair<int, Complex>> out;
    const auto* outer = current.outerIndexPtr();
    const auto* inner = current.innerIndexPtr();
    for (int r = 0; r < m.outerSize(); ++r) {
      for (SparseC::InnerIterator it(m, r); it; ++it) {
        const auto* hit = std::lower_bound(inner + outer[r], inner + outer[r + 1], it.col());
        out.emplace_back(static_cast<int>(hit - inner), it.value());
      }
    }
    return out;
  }

  void refresh(Real t) const {
    Complex* v = current.valuePtr();
    std::copy(base.begin(), base.end(), v);
    for (std::size_t k = 0; k < h.terms.size(); ++k) {
      const Real c = h.terms[k].coefficient(t);
      if (c == 0.0) continue;
      for (const auto& [pos, value] : term_entries[k]) v[pos] += c * value;
    }
  }

  template <class Dense>
  void apply(Real t, const Dense& x, Dense& y) const {
    refresh(t);
    y.noalias() = current * x;
  }
};

void record_sample(Trajectory& traj, Real t, const VectorR& pops, const EvolveOptions& opts) {
  traj.times.push_back(t);
  traj.observables.push_back(observables_from_populations(traj.space, pops));
  std::vector<Real> tr;
  tr.reserve(opts.tracked.size());
  for (int i : opts.tracked) tr.push_back(pops[i]);
  traj.tracked.push_back(std::move(tr));

  const ObservableSet& o = traj.observables.back();
  const Real top = o.p_ph.back();
  if (top > traj.stats.max_cutoff_population) traj.stats.max_cutoff_population = top;
}

void check_drift(Trajectory& traj, Real drift, Real t, const EvolveOptions& opts,
                 const char* what) {
  traj.stats.max_norm_drift = std::max(traj.stats.max_norm_drift, drift);
  if (drift > opts.drift_limit) {
    std::ostringstream os;
    os << what << " drift " << drift << " at t = " << t << " exceeds " << opts.drift_limit
       << "; rerun with a tighter tolerance (current " << opts.tol << ", try "
       << opts.tol / 10.0 << ")";
    fail(ErrorKind::Numeric, os.str());
  }
}

void finish_cutoff_check(Trajectory& traj, const EvolveOptions& opts) {
  if (traj.stats.max_cutoff_population <= opts.cutoff_limit) return;
  std::ostringstream os;
  os << "population " << traj.stats.max_cutoff_population << " reached the Fock cutoff n_max = "
     << traj.space.n_max;
  if (opts.cutoff_is_error) fail(ErrorKind::Cutoff, os.str());
  traj.stats.warnings.push_back(os.str());
}

void copy_stats(TrajectoryStats& dst, const StepperStats& src) {
  dst.steps += src.steps;
  dst.rejected += src.rejected;
  dst.rhs_evals += src.rhs_evals;
}

std::vector<Real> sample_times(std::pair<Real, Real> span, int count) {
  require(count >= 2, ErrorKind::Configuration, "need at least two samples");
  require(span.second > span.first, ErrorKind::Configuration, "time span must be increasing");
  std::vector<Real> t(count);
  const Real dt = (span.second - span.first) / (count - 1);
  for (int j = 0; j < count; ++j) t[j] = span.first + j * dt;
  t.back() = span.second;
  return t;
}

}  // namespace

Trajectory evolve_schrodinger(const AffineHamiltonian& h, const StateVector& psi0,
                              std::pair<Real, Real> t_span, int sample_count,
                              const EvolveOptions& opts) {
  check_tol(opts.tol);
  require(psi0.space() == h.space, ErrorKind::Domain, "initial state lives in another space");
  require(std::abs(psi0.norm() - 1.0) < 1e-10, ErrorKind::Normalization,
          "initial state must be normalized");
  const std::vector<Real> grid = sample_times(t_span, sample_count);

  const FramedHamiltonian fh(h, opts.frame);
  VectorC u, phi, w;
  auto rhs = [&](Real t, const VectorC& y, VectorC& dy) {
    if (fh.rotating) {
      u = phases(fh.energies, t);
      phi = u.cwiseProduct(y);
      fh.apply(t, phi, w);
      dy = (-kI) * u.conjugate().cwiseProduct(w);
    } else {
      fh.apply(t, y, dy);
      dy *= -kI;
    }
  };
  StepperOptions so;
  so.rtol = opts.tol;
  so.atol = opts.tol;
  so.h_max = step_cap(h);
  so.max_steps = opts.max_steps;
  DormandPrince<VectorC> stepper(rhs, so);

  Trajectory traj;
  traj.space = h.space;
  Real t = t_span.first;
  // Frame state at t0: ψ̃(t0) = exp(+iE t0) ψ(t0).
  VectorC y = fh.rotating ? VectorC(phases(fh.energies, t).conjugate().cwiseProduct(psi0.amplitudes()))
                          : psi0.amplitudes();
  for (Real ts : grid) {
    stepper.integrate(t, y, ts);
    check_drift(traj, std::abs(y.norm() - 1.0), t, opts, "norm");
    record_sample(traj, ts, populations(y), opts);
    if (opts.store_states)
      traj.states.push_back(fh.rotating ? VectorC(phases(fh.energies, ts).cwiseProduct(y)) : y);
  }
  copy_stats(traj.stats, stepper.stats());
  finish_cutoff_check(traj, opts);
  return traj;
}

Trajectory evolve_schrodinger(const SpaceSpec& space, const SystemParams& params,
                              const std::vector<ModulationSchedule>& schedules,
                              const StateVector& psi0, std::pair<Real, Real> t_span,
                              int sample_count, const EvolveOptions& opts) {
  return evolve_schrodinger(hamiltonian_affine(space, params, schedules), psi0, t_span,
                            sample_count, opts);
}

FloquetPropagator floquet_propagator(const AffineHamiltonian& h, const EvolveOptions& opts) {
  check_tol(opts.tol);
  const auto eta = h.common_frequency();
  require(eta.has_value() && *eta > 0.0, ErrorKind::Domain,
          "stroboscopic evolution needs one shared nonzero drive frequency");
  const Real period = 2.0 * std::numbers::pi / *eta;
  const auto d = h.constant.rows();

  const FramedHamiltonian fh(h, opts.frame);
  VectorC u;
  MatrixRM phi, w;
  auto rhs = [&](Real t, const MatrixRM& y, MatrixRM& dy) {
    if (fh.rotating) {
      u = phases(fh.energies, t);
      phi = y.array().colwise() * u.array();
      fh.apply(t, phi, w);
      dy = (w.array().colwise() * u.conjugate().array()) * (-kI);
    } else {
      fh.apply(t, y, dy);
      dy *= -kI;
    }
  };
  StepperOptions so;
  so.rtol = opts.tol;
  so.atol = opts.tol;
  so.h_max = step_cap(h);
  so.max_steps = opts.max_steps;
  DormandPrince<MatrixRM> stepper(rhs, so);

  MatrixRM y = MatrixRM::Identity(d, d);
  Real t = 0.0;
  stepper.integrate(t, y, period);

  FloquetPropagator fp;
  fp.period = period;
  fp.U = fh.rotating ? MatrixC(y.array().colwise() * phases(fh.energies, period).array())
                     : MatrixC(y);
  fp.unitarity_defect = (fp.U.adjoint() * fp.U - MatrixC::Identity(d, d)).cwiseAbs().maxCoeff();
  // Nearest unitary (polar factor).  Powers of a slightly non-unitary U would
  // otherwise drift in norm over thousands of periods.
  const Eigen::BDCSVD<MatrixC> svd(fp.U, Eigen::ComputeFullU | Eigen::ComputeFullV);
  fp.U = svd.matrixU() * svd.matrixV().adjoint();
  fp.stats = stepper.stats();
  return fp;
}

FloquetPropagator floquet_propagator(const AffineHamiltonian& h, const std::vector<int>& subspace,
                                     const EvolveOptions& opts) {
  require(!subspace.empty(), ErrorKind::Domain, "subspace must not be empty");
  const std::vector<int> closure = coupled_subspace(h, subspace);
  require(closure.size() == subspace.size() && std::equal(closure.begin(), closure.end(), subspace.begin()),
          ErrorKind::Domain, "subspace is not invariant under H(t); pass sorted coupled_subspace output");
  FloquetPropagator fp = floquet_propagator(restrict_to(h, subspace), opts);
  fp.subspace = subspace;
  return fp;
}

Trajectory evolve_stroboscopic(const FloquetPropagator& fp, const StateVector& psi0,
                               long periods, long stride, const EvolveOptions& opts) {
  require(stride >= 1 && periods >= stride, ErrorKind::Configuration,
          "stroboscopic run needs 1 <= stride <= periods");
  require(fp.subspace.empty(), ErrorKind::Unsupported,
          "stroboscopic trajectories need the full-space propagator");
  require(psi0.space().dim() == fp.U.rows(), ErrorKind::Domain,
          "initial state dimension does not match the propagator");
  require(std::abs(psi0.norm() - 1.0) < 1e-10, ErrorKind::Normalization,
          "initial state must be normalized");

  MatrixC step = MatrixC::Identity(fp.U.rows(), fp.U.cols());
  {
    MatrixC base = fp.U;
    for (long e = stride; e > 0; e >>= 1) {
      if (e & 1) step = step * base;
      if (e > 1) base = base * base;
    }
  }

  Trajectory traj;
  traj.space = psi0.space();
  traj.stats.steps = fp.stats.steps;
  traj.stats.rejected = fp.stats.rejected;
  traj.stats.rhs_evals = fp.stats.rhs_evals;
  traj.stats.unitarity_defect = fp.unitarity_defect;

  VectorC psi = psi0.amplitudes();
  VectorC next;
  const long samples = periods / stride;
  for (long j = 0; j <= samples; ++j) {
    const Real t = static_cast<Real>(j * stride) * fp.period;
    if (j > 0) {
      next.noalias() = step * psi;
      psi.swap(next);
    }
    check_drift(traj, std::abs(psi.norm() - 1.0), t, opts, "norm");
    record_sample(traj, t, populations(psi), opts);
    if (opts.store_states) traj.states.push_back(psi);
  }
  finish_cutoff_check(traj, opts);
  return traj;
}

Trajectory evolve_stroboscopic(const AffineHamiltonian& h, const StateVector& psi0,
                               long periods, long stride, const EvolveOptions& opts) {
  require(psi0.space() == h.space, ErrorKind::Domain, "initial state lives in another space");
  return evolve_stroboscopic(floquet_propagator(h, opts), psi0, periods, stride, opts);
}

Trajectory evolve_floquet_sampled(const AffineHamiltonian& h, const StateVector& psi0,
                                  std::pair<Real, Real> t_span, int sample_count,
                                  const EvolveOptions& opts) {
  check_tol(opts.tol);
  require(psi0.space() == h.space, ErrorKind::Domain, "initial state lives in another space");
  require(std::abs(psi0.norm() - 1.0) < 1e-10, ErrorKind::Normalization,
          "initial state must be normalized");
  require(t_span.first >= 0.0, ErrorKind::Configuration, "Floquet sampling starts at t >= 0");
  const std::vector<Real> grid = sample_times(t_span, sample_count);
  const FloquetPropagator fp = floquet_propagator(h, opts);

  const FramedHamiltonian fh(h, opts.frame);
  VectorC u, phi, w;
  auto rhs = [&](Real t, const VectorC& y, VectorC& dy) {
    if (fh.rotating) {
      u = phases(fh.energies, t);
      phi = u.cwiseProduct(y);
      fh.apply(t, phi, w);
      dy = (-kI) * u.conjugate().cwiseProduct(w);
    } else {
      fh.apply(t, y, dy);
      dy *= -kI;
    }
  };
  StepperOptions so;
  so.rtol = opts.tol;
  so.atol = opts.tol;
  so.h_max = step_cap(h);
  so.max_steps = opts.max_steps;

  Trajectory traj;
  traj.space = h.space;
  traj.stats.unitarity_defect = fp.unitarity_defect;
  copy_stats(traj.stats, fp.stats);

  VectorC strobe = psi0.amplitudes();
  VectorC next;
  long period_index = 0;
  for (Real ts : grid) {
    const auto j = static_cast<long>(std::floor(ts / fp.period));
    for (; period_index < j; ++period_index) {
      next.noalias() = fp.U * strobe;
      strobe.swap(next);
    }
    // H is periodic, so the remainder runs from 0 to tau.
    const Real tau = ts - static_cast<Real>(j) * fp.period;
    VectorC psi = strobe;
    if (tau > 0.0) {
      DormandPrince<VectorC> stepper(rhs, so);
      Real t = 0.0;
      stepper.integrate(t, psi, tau);
      copy_stats(traj.stats, stepper.stats());
      if (fh.rotating) psi = phases(fh.energies, tau).cwiseProduct(psi);
    }
    check_drift(traj, std::abs(psi.norm() - 1.0), ts, opts, "norm");
    record_sample(traj, ts, populations(psi), opts);
    if (opts.store_states) traj.states.push_back(psi);
  }
  finish_cutoff_check(traj, opts);
  return traj;
}

std::vector<std::pair<Real, SparseC>> jump_operators(const OperatorSet& ops,
                                                     const DissipationRates& rates) {
  rates.validate(ops.space.N);
  std::vector<std::pair<Real, SparseC>> jumps;
  if (rates.kappa > 0.0) jumps.emplace_back(rates.kappa, ops.a);
  const bool per_qubit = std::any_of(rates.gamma.begin(), rates.gamma.end(), [](Real r) { return r > 0; }) ||
                         std::any_of(rates.gamma_phi.begin(), rates.gamma_phi.end(), [](Real r) { return r > 0; });
  if (!per_qubit) return jumps;
  require(ops.space.basis == BasisKind::Distinguishable, ErrorKind::Unsupported,
          "per-qubit relaxation and dephasing need the distinguishable basis");
  for (int l = 0; l < ops.space.N; ++l) {
    if (!rates.gamma.empty() && rates.gamma[l] > 0.0)
      jumps.emplace_back(rates.gamma[l], ops.sigma_minus[l]);
    if (!rates.gamma_phi.empty() && rates.gamma_phi[l] > 0.0)
      jumps.emplace_back(0.5 * rates.gamma_phi[l], ops.sigma_z[l]);
  }
  return jumps;
}

namespace {

// True when every jump operator shifts the frame energy by a fixed amount,
// so exp(iEt) J exp(-iEt) is J times a phase and D[J] is frame invariant.
// Operator with at most one nonzero per row: (O x)_i = val_i x_{col_i}.
struct RowMonomial {
  std::vector<int> col;
  VectorC val;
};

std::optional<RowMonomial> row_monomial(const SparseC& m) {
  RowMonomial r{std::vector<int>(m.rows(), -1), VectorC::Zero(m.rows())};
  for (int i = 0; i < m.outerSize(); ++i) {
    for (SparseC::InnerIterator it(m, i); it; ++it) {
      if (it.value() == Complex(0.0)) continue;
      if (r.col[i] >= 0) return std::nullopt;
      r.col[i] = static_cast<int>(it.col());
      r.val[i] = it.value();
    }
  }
  return r;
}

bool is_diagonal(const SparseC& m) {
  for (int r = 0; r < m.outerSize(); ++r)
    for (SparseC::InnerIterator it(m, r); it; ++it)
      if (it.row() != it.col() && it.value() != Complex(0.0)) return false;
  return true;
}

bool dissipators_commute_with_frame(const std::vector<std::pair<Real, SparseC>>& jumps,
                                    const VectorR& e) {
  const Real scale = 1e-12 * std::max<Real>(1.0, e.cwiseAbs().maxCoeff());
  for (const auto& [rate, op] : jumps) {
    bool first = true;
    Real shift = 0.0;
    for (int r = 0; r < op.outerSize(); ++r)
      for (SparseC::InnerIterator it(op, r); it; ++it) {
        const Real s = e[it.row()] - e[it.col()];
        if (first) {
          shift = s;
          first = false;
        } else if (std::abs(s - shift) > scale) {
          return false;
        }
      }
  }
  return true;
}

}  // namespace

Trajectory evolve_lindblad(const AffineHamiltonian& h, const DissipationRates& rates,
                           const DensityMatrix& rho0, std::pair<Real, Real> t_span,
                           int sample_count, const EvolveOptions& opts_in) {
  check_tol(opts_in.tol);
  require(rho0.space() == h.space, ErrorKind::Domain, "initial state lives in another space");
  require(std::abs(rho0.trace() - 1.0) < 1e-10, ErrorKind::Normalization,
          "initial density matrix must have unit trace");
  require(rho0.hermiticity_defect() < 1e-12, ErrorKind::Domain,
          "initial density matrix must be Hermitian");
  const std::vector<Real> grid = sample_times(t_span, sample_count);

  const OperatorSet ops = build_operators(h.space);
  const auto jumps = jump_operators(ops, rates);

  EvolveOptions opts = opts_in;
  Trajectory traj;
  traj.space = h.space;
  if (opts.frame == Frame::Interaction &&
      !dissipators_commute_with_frame(jumps, frame_energies(h))) {
    opts.frame = Frame::Lab;
    traj.stats.warnings.push_back("jump operators do not commute with the rotating frame; using the lab frame");
  }
  const FramedHamiltonian fh(h, opts.frame);
  const int d = h.space.dim();

  // Diagonal jump operators (and the anticommutator part of every jump,
  // which is diagonal for all operators built here) act elementwise:
  // dρ_ij += G_ij ρ_ij.  Off-diagonal jumps keep the sandwich J ρ J^dag.
  VectorC decay_diag = VectorC::Zero(d);
  bool decay_is_diagonal = true;
  MatrixRM elementwise = MatrixRM::Zero(d, d);
  std::vector<std::pair<Real, SparseC>> sandwiches;
  std::vector<std::pair<Real, RowMonomial>> gathers;
  SparseC decay(d, d);
  for (const auto& [rate, op] : jumps) {
    const SparseC od_o = SparseC(op.adjoint()) * op;
    decay += rate * od_o;
    if (is_diagonal(op)) {
      const VectorC diag = VectorC(op.diagonal());
      elementwise += rate * (diag * diag.adjoint());
    } else if (auto m = row_monomial(op)) {
      gathers.emplace_back(rate, std::move(*m));
    } else {
      sandwiches.emplace_back(rate, op);
    }
  }
  decay_is_diagonal = is_diagonal(decay);
  if (decay_is_diagonal) {
    decay_diag = VectorC(decay.diagonal());
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) elementwise(i, j) -= 0.5 * (decay_diag[i] + decay_diag[j]);
  }

  VectorC u;
  MatrixRM frame, lab, k, x, xa;
  // y is Hermitian at every stage, so rho H = (H rho)^dag and
  // J rho J^dag = (J (J rho)^dag)^dag.
  auto rhs = [&](Real t, const MatrixRM& y, MatrixRM& dy) {
    if (fh.rotating) {
      u = phases(fh.energies, t);
      frame.resize(d, d);
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) frame(i, j) = cmul(u[i], std::conj(u[j]));
      lab = frame.cwiseProduct(y);
      fh.apply(t, lab, k);
      dy = (k - k.adjoint()).cwiseProduct(frame.conjugate()) * (-kI);
    } else {
      fh.apply(t, y, k);
      dy = (k - k.adjoint()) * (-kI);
    }
    if (jumps.empty()) return;
    dy += elementwise.cwiseProduct(y);
    if (!decay_is_diagonal) {
      k.noalias() = decay * y;
      dy -= 0.5 * (k + k.adjoint());
    }
    for (const auto& [rate, m] : gathers) {
      for (int i = 0; i < d; ++i) {
        if (m.col[i] < 0) continue;
        const Complex vi = rate * m.val[i];
        for (int j = 0; j < d; ++j) {
          if (m.col[j] >= 0)
            dy(i, j) += cmul(cmul(vi, std::conj(m.val[j])), y(m.col[i], m.col[j]));
        }
      }
    }
    for (const auto& [rate, op] : sandwiches) {
      x.noalias() = op * y;
      xa = x.adjoint();
      k.noalias() = op * xa;
      dy += rate * k.adjoint();
    }
  };
  auto symmetrize = [](MatrixRM& y, MatrixRM& dy) {
    y = 0.5 * (y + y.adjoint()).eval();
    dy = 0.5 * (dy + dy.adjoint()).eval();
  };
  StepperOptions so;
  so.rtol = opts.tol;
  so.atol = opts.tol;
  so.h_max = step_cap(h);
  so.max_steps = opts.max_steps;
  DormandPrince<MatrixRM> stepper(rhs, so, symmetrize);

  Real t = t_span.first;
  MatrixRM y = rho0.matrix();
  if (fh.rotating) {
    const VectorC u0 = phases(fh.energies, t);
    y = y.cwiseProduct((u0 * u0.adjoint()).conjugate());
  }
  traj.stats.min_eigenvalue = std::numeric_limits<Real>::infinity();
  for (Real ts : grid) {
    stepper.integrate(t, y, ts);
    const Real tr = y.trace().real();
    check_drift(traj, std::abs(tr - 1.0), t, opts, "trace");
    const Real herm = (y - y.adjoint()).cwiseAbs().maxCoeff();
    traj.stats.max_hermiticity_defect = std::max(traj.stats.max_hermiticity_defect, herm);
    Eigen::SelfAdjointEigenSolver<MatrixC> es(MatrixC(y), Eigen::EigenvaluesOnly);
    const Real lo = es.eigenvalues().minCoeff();
    traj.stats.min_eigenvalue = std::min(traj.stats.min_eigenvalue, lo);
    if (lo < -opts.negativity_limit) {
      std::ostringstream os;
      os << "density matrix eigenvalue " << lo << " at t = " << ts << " below -"
         << opts.negativity_limit << "; tighten the tolerance";
      fail(ErrorKind::Numeric, os.str());
    }
    record_sample(traj, ts, VectorR(y.diagonal().real()), opts);
    traj.purity.push_back(y.squaredNorm());
    if (opts.store_states) {
      if (fh.rotating) {
        const VectorC us = phases(fh.energies, ts);
        traj.density_matrices.push_back(MatrixC(y.cwiseProduct(us * us.adjoint())));
      } else {
        traj.density_matrices.push_back(MatrixC(y));
      }
    }
  }
  copy_stats(traj.stats, stepper.stats());
  finish_cutoff_check(traj, opts);
  return traj;
}

Trajectory evolve_lindblad(const SpaceSpec& space, const RealisticParams& params,
                           const std::vector<ModulationSchedule>& schedules,
                           const DissipationRates& rates, const DensityMatrix& rho0,
                           std::pair<Real, Real> t_span, int sample_count,
                           const EvolveOptions& opts) {
  return evolve_lindblad(realistic_affine(space, params, schedules), rates, rho0, t_span,
                         sample_count, opts);
}

}  // namespace dicke
