#include "dicke/scan.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <exception>
#include <numbers>
#include <sstream>
#include <thread>

#include <Eigen/Eigenvalues>
#include <boost/math/tools/minima.hpp>
#include <unsupported/Eigen/FFT>

namespace dicke {

AffineHamiltonian Scenario::hamiltonian(Real eta) const {
  std::vector<ModulationSchedule> driven = schedules;
  for (auto& s : driven) s.eta = eta;
  if (const auto* p = std::get_if<SystemParams>(&params)) return hamiltonian_affine(space, *p, driven);
  return realistic_affine(space, std::get<RealisticParams>(params), driven);
}

std::vector<int> Scenario::target_indices() const {
  require(target_photons >= 0 && target_photons <= space.n_max, ErrorKind::Domain,
          "target photon number lies outside the Fock cutoff");
  std::vector<int> out;
  for (int a = 0; a < space.atomic_dim(); ++a)
    if (space.excitations_of_atomic(a) == target_excitations) out.push_back(space.index(a, target_photons));
  require(!out.empty(), ErrorKind::Domain, "no atomic configuration carries the target excitation count");
  return out;
}

Real Scenario::target_population(const VectorC& psi) const {
  Real p = 0.0;
  for (int i : target_indices()) p += std::norm(psi[i]);
  return p;
}

namespace {

struct UnitaryEigen {
  MatrixC vectors;
  VectorC values;
};

// Eigenbasis of a unitary matrix.  (U + U^dag)/2 is Hermitian and shares
// the eigenvectors of U; only its eigenvalues cos(theta) can coincide for
// distinct theta, so close clusters are split by a Schur decomposition of U
// compressed onto the cluster.  Much faster than a full complex Schur.
UnitaryEigen unitary_eigen(const MatrixC& U) {
  const Eigen::Index d = U.rows();
  const MatrixC K = 0.5 * (U + U.adjoint());
  const Eigen::SelfAdjointEigenSolver<MatrixC> es(K);
  MatrixC V = es.eigenvectors();
  const VectorR& c = es.eigenvalues();

  constexpr Real kCluster = 1e-6;
  Eigen::Index start = 0;
  while (start < d) {
    Eigen::Index end = start + 1;
    while (end < d && c[end] - c[end - 1] < kCluster) ++end;
    const Eigen::Index m = end - start;
    if (m > 1) {
      const MatrixC block = V.middleCols(start, m);
      const Eigen::ComplexSchur<MatrixC> schur(block.adjoint() * U * block);
      V.middleCols(start, m) = block * schur.matrixU();
    }
    start = end;
  }

  UnitaryEigen out;
  out.values = (V.adjoint() * U * V).diagonal();
  out.values.array() /= out.values.array().abs();
  const Real residual = (U * V - V * out.values.asDiagonal()).cwiseAbs().maxCoeff();
  if (residual > 1e-8) {
    std::ostringstream os;
    os << "Floquet eigendecomposition residual " << residual << " exceeds 1e-8";
    fail(ErrorKind::Numeric, os.str());
  }
  out.vectors = std::move(V);
  return out;
}

}  // namespace

Real max_transfer(const Scenario& scenario, Real eta, Real horizon, Real* unitarity_defect) {
  require(eta > 0.0, ErrorKind::Domain, "drive frequency must be positive");
  const AffineHamiltonian h = scenario.hamiltonian(eta);
  const std::vector<int> targets = scenario.target_indices();
  // Only the block of U coupled to the target level can feed it.
  const std::vector<int> block = coupled_subspace(h, targets);
  const Real period = 2.0 * std::numbers::pi / eta;

  // psi(jT) = Q diag(lambda^j) Q^dag psi0.
  MatrixC Q;
  VectorC lambda;
  if (h.common_frequency()) {
    const FloquetPropagator fp = floquet_propagator(h, block, scenario.evolve);
    if (unitarity_defect) *unitarity_defect = fp.unitarity_defect;
    UnitaryEigen ue = unitary_eigen(fp.U);
    Q = std::move(ue.vectors);
    lambda = std::move(ue.values);
  } else {
    // Nothing is modulated: the one-period map is exp(-i H T) exactly.
    const MatrixC hb = MatrixC(restrict_to(h, block).constant);
    const Eigen::SelfAdjointEigenSolver<MatrixC> es(hb);
    Q = es.eigenvectors();
    lambda = (Complex(0.0, -period) * es.eigenvalues().cast<Complex>()).array().exp();
    if (unitarity_defect) *unitarity_defect = 0.0;
  }

  const auto nb = static_cast<Eigen::Index>(block.size());
  VectorC psi0(nb);
  for (Eigen::Index i = 0; i < nb; ++i) psi0[i] = scenario.initial[block[i]];
  const VectorC c = Q.adjoint() * psi0;
  MatrixC w(static_cast<Eigen::Index>(targets.size()), nb);
  for (std::size_t b = 0; b < targets.size(); ++b) {
    const auto row = std::lower_bound(block.begin(), block.end(), targets[b]) - block.begin();
    w.row(static_cast<Eigen::Index>(b)) = Q.row(row).cwiseProduct(c.transpose());
  }

  const long periods = static_cast<long>(std::ceil(horizon / period));
  VectorC z = VectorC::Ones(nb);
  Real best = (w * z).squaredNorm();
  for (long j = 1; j <= periods; ++j) {
    z.array() *= lambda.array();
    if (j % 4096 == 0) z.array() /= z.array().abs();
    best = std::max(best, (w * z).squaredNorm());
  }
  return best;
}

namespace {

Real median(std::vector<Real> v) {
  const auto mid = v.begin() + static_cast<long>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  return *mid;
}

std::vector<Real> linspace(Real a, Real b, int n) {
  std::vector<Real> out(n);
  for (int i = 0; i < n; ++i) out[i] = a + (b - a) * i / (n - 1);
  return out;
}

struct GridScan {
  std::vector<Real> transfer;
  Real max_defect = 0.0;
};

GridScan scan_grid(const Scenario& scenario, const std::vector<Real>& etas, Real horizon,
                   unsigned threads) {
  const std::size_t n = etas.size();
  GridScan out;
  out.transfer.assign(n, 0.0);
  std::vector<Real> defects(n, 0.0);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        out.transfer[i] = max_transfer(scenario, etas[i], horizon, &defects[i]);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(n));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  // Report failures in grid order, independent of scheduling.
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  out.max_defect = *std::max_element(defects.begin(), defects.end());
  return out;
}

struct Peak {
  std::size_t index = 0;
  Real eta = 0.0;
  Real value = 0.0;
  Real width = 0.0;
  Real residual = 0.0;
};

Peak locate_peak(const std::vector<Real>& etas, const std::vector<Real>& y, Real background) {
  const std::size_t n = y.size();
  const std::size_t i = static_cast<std::size_t>(std::max_element(y.begin(), y.end()) - y.begin());
  if (i == 0 || i + 1 == n) {
    std::ostringstream os;
    os << "transfer peaks at the edge of the swept interval (eta = " << etas[i]
       << "); widen the range";
    fail(ErrorKind::Bracket, os.str());
  }
  const Real h = etas[1] - etas[0];
  const Real ym = y[i - 1], y0 = y[i], yp = y[i + 1];
  const Real curvature = ym - 2.0 * y0 + yp;
  Peak p;
  p.index = i;
  p.eta = etas[i];
  p.value = y0;
  if (curvature < 0.0) {
    const Real shift = 0.5 * (ym - yp) / curvature;
    p.eta = etas[i] + h * shift;
    p.value = y0 - 0.25 * (ym - yp) * shift;
  }

  if (i >= 2 && i + 2 < n) {
    // Least-squares parabola through five samples, reported as a misfit.
    Eigen::Matrix<Real, 5, 3> A;
    Eigen::Matrix<Real, 5, 1> b;
    for (int k = -2; k <= 2; ++k) {
      A.row(k + 2) << 1.0, k, k * k;
      b[k + 2] = y[i + k];
    }
    const Eigen::Vector3d coef = A.colPivHouseholderQr().solve(b);
    p.residual = std::sqrt((A * coef - b).squaredNorm() / 5.0);
  }

  const Real half = background + 0.5 * (y0 - background);
  Real left = etas.front(), right = etas.back();
  for (std::size_t k = i; k > 0; --k) {
    if (y[k - 1] < half) {
      left = etas[k - 1] + h * (half - y[k - 1]) / (y[k] - y[k - 1]);
      break;
    }
  }
  for (std::size_t k = i; k + 1 < n; ++k) {
    if (y[k + 1] < half) {
      right = etas[k] + h * (y[k] - half) / (y[k] - y[k + 1]);
      break;
    }
  }
  p.width = right - left;
  return p;
}

}  // namespace

SweepResult sweep_resonance(const Scenario& scenario, std::pair<Real, Real> eta_range,
                            const SweepOptions& options) {
  auto [lo, hi] = eta_range;
  require(lo > 0.0 && hi > lo, ErrorKind::Configuration, "sweep range must satisfy 0 < eta_lo < eta_hi");
  require(options.grid_points >= 5, ErrorKind::Configuration, "sweep needs at least 5 grid points");

  SweepResult r;
  r.horizon = options.horizon;
  if (r.horizon <= 0.0) {
    require(scenario.reference_rate > 0.0, ErrorKind::Configuration,
            "default horizon needs a positive reference rate");
    r.horizon = 1.2 * std::numbers::pi / scenario.reference_rate;
  } else if (scenario.reference_rate > 0.0) {
    const Real half_period = 0.5 * std::numbers::pi / scenario.reference_rate;
    if (r.horizon < half_period) {
      std::ostringstream os;
      os << "sweep horizon " << r.horizon << " is shorter than the time to full transfer "
         << half_period;
      fail(ErrorKind::Configuration, os.str());
    }
  }

  r.coarse_etas = linspace(lo, hi, options.grid_points);
  const GridScan coarse = scan_grid(scenario, r.coarse_etas, r.horizon, options.threads);
  r.coarse_transfer = coarse.transfer;
  r.coarse_spacing = r.coarse_etas[1] - r.coarse_etas[0];
  r.max_unitarity_defect = coarse.max_defect;

  r.background = median(r.coarse_transfer);
  const Real top = *std::max_element(r.coarse_transfer.begin(), r.coarse_transfer.end());
  if (!(top > options.background_factor * r.background)) {
    std::ostringstream os;
    os << "no resonance: maximum transfer " << top << " does not exceed "
       << options.background_factor << " x background " << r.background;
    fail(ErrorKind::NoResonance, os.str());
  }
  Peak peak = locate_peak(r.coarse_etas, r.coarse_transfer, r.background);
  r.coarse_peak_eta = peak.eta;

  if (options.zoom) {
    const Real half_span = 0.05 * (hi - lo);
    r.etas = linspace(peak.eta - half_span, peak.eta + half_span, options.grid_points);
    const GridScan fine = scan_grid(scenario, r.etas, r.horizon, options.threads);
    r.transfer = fine.transfer;
    r.max_unitarity_defect = std::max(r.max_unitarity_defect, fine.max_defect);
    peak = locate_peak(r.etas, r.transfer, r.background);
  } else {
    r.etas = r.coarse_etas;
    r.transfer = r.coarse_transfer;
  }
  r.grid_spacing = r.etas[1] - r.etas[0];
  r.peak_eta = peak.eta;
  r.peak_transfer = peak.value;
  r.peak_width = peak.width;
  r.quadratic_residual = peak.residual;
  return r;
}

namespace {

struct LinearFit {
  Real a = 0.0, b = 0.0, c = 0.0;
  Real sse = 0.0;
};

// For fixed omega the model a cos(wt) + b sin(wt) + c is linear.
LinearFit project(const std::vector<Real>& t, const std::vector<Real>& y, Real omega) {
  const auto n = static_cast<Eigen::Index>(t.size());
  Eigen::MatrixX3d A(n, 3);
  Eigen::VectorXd b(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    A(i, 0) = std::cos(omega * t[i]);
    A(i, 1) = std::sin(omega * t[i]);
    A(i, 2) = 1.0;
    b[i] = y[i];
  }
  const Eigen::Vector3d x = A.colPivHouseholderQr().solve(b);
  return {x[0], x[1], x[2], (A * x - b).squaredNorm()};
}

// Brent on the sse pins omega only to ~sqrt(machine eps) because the sse is
// flat at its minimum.  A few Gauss-Newton steps on all four parameters
// finish the job; a step is kept only when it lowers the sse.
Real polish(const std::vector<Real>& t, const std::vector<Real>& y, Real omega) {
  const auto n = static_cast<Eigen::Index>(t.size());
  LinearFit lf = project(t, y, omega);
  Eigen::MatrixX4d J(n, 4);
  Eigen::VectorXd r(n);
  for (int iter = 0; iter < 4; ++iter) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const Real c = std::cos(omega * t[i]), s = std::sin(omega * t[i]);
      J(i, 0) = c;
      J(i, 1) = s;
      J(i, 2) = 1.0;
      J(i, 3) = t[i] * (lf.b * c - lf.a * s);
      r[i] = y[i] - (lf.a * c + lf.b * s + lf.c);
    }
    const Eigen::Vector4d step = J.colPivHouseholderQr().solve(r);
    const LinearFit trial = project(t, y, omega + step[3]);
    if (!(trial.sse < lf.sse)) break;
    omega += step[3];
    lf = trial;
  }
  return omega;
}

}  // namespace

namespace {

bool uniformly_spaced(const std::vector<Real>& t) {
  const Real dt = (t.back() - t.front()) / static_cast<Real>(t.size() - 1);
  for (std::size_t i = 1; i < t.size(); ++i)
    if (std::abs(t[i] - t[i - 1] - dt) > 1e-9 * std::max(1.0, std::abs(t[i]))) return false;
  return dt > 0.0;
}

// Index and spacing of the strongest positive-frequency bin of the
// mean-removed record.  Uniform records go through an FFT, anything else
// through a direct sum on the grid 2 pi k / span.
std::pair<int, Real> strongest_bin(const std::vector<Real>& t, const std::vector<Real>& values, Real mean) {
  const std::size_t n = t.size();
  std::vector<Real> centred(n);
  for (std::size_t i = 0; i < n; ++i) centred[i] = values[i] - mean;

  std::vector<Real> power(n / 2 + 1, 0.0);
  Real d_omega = 0.0;
  if (uniformly_spaced(t)) {
    // Zero padding to a power of two keeps the transform O(n log n) for any
    // record length and interpolates the spectrum between natural bins.
    const std::size_t padded = std::bit_ceil(n);
    const Real dt = t.back() / static_cast<Real>(n - 1);
    d_omega = 2.0 * std::numbers::pi / (static_cast<Real>(padded) * dt);
    centred.resize(padded, 0.0);
    Eigen::FFT<Real> fft;
    std::vector<Complex> spectrum;
    fft.fwd(spectrum, centred);
    power.assign(padded / 2 + 1, 0.0);
    for (std::size_t k = 1; k < power.size(); ++k) power[k] = std::norm(spectrum[k]);
  } else {
    d_omega = 2.0 * std::numbers::pi / t.back();
    for (std::size_t k = 1; k < power.size(); ++k) {
      Complex s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += centred[i] * std::polar(1.0, -static_cast<Real>(k) * d_omega * t[i]);
      power[k] = std::norm(s);
    }
  }
  const auto best = std::max_element(power.begin() + 1, power.end()) - power.begin();
  return {static_cast<int>(best), d_omega};
}

// Centred moving average over `width` samples; returns the shortened series.
std::pair<std::vector<Real>, std::vector<Real>> smooth(const std::vector<Real>& t,
                                                       const std::vector<Real>& y, Real window) {
  const std::size_t n = t.size();
  require(uniformly_spaced(t), ErrorKind::Domain, "smoothing needs uniformly spaced samples");
  const Real dt = (t.back() - t.front()) / static_cast<Real>(n - 1);
  const auto width = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(window / dt)));
  require(n >= width + 8, ErrorKind::FitRejected, "smoothing window leaves fewer than 8 samples");

  std::vector<Real> ts, ys;
  Real sum = 0.0;
  for (std::size_t i = 0; i < width; ++i) sum += y[i];
  for (std::size_t i = 0; i + width <= n; ++i) {
    if (i > 0) sum += y[i + width - 1] - y[i - 1];
    ts.push_back(0.5 * (t[i] + t[i + width - 1]));
    ys.push_back(sum / static_cast<Real>(width));
  }
  return {ts, ys};
}

}  // namespace

RabiFit fit_rabi(const std::vector<Real>& times, const std::vector<Real>& values,
                 const RabiFitOptions& options) {
  require(times.size() == values.size(), ErrorKind::Domain, "times and values differ in length");
  require(times.size() >= 8, ErrorKind::FitRejected, "fit needs at least 8 samples");
  if (options.smoothing > 0.0) {
    const auto [ts, ys] = smooth(times, values, options.smoothing);
    RabiFit fit = fit_rabi(ts, ys);
    Real sse = 0.0;
    for (std::size_t i = 0; i < times.size(); ++i) {
      const Real model = fit.amplitude * std::cos(2.0 * fit.rate * times[i] + fit.phase) + fit.offset;
      sse += (values[i] - model) * (values[i] - model);
    }
    fit.raw_residual_rms = std::sqrt(sse / static_cast<Real>(times.size()));
    return fit;
  }
  const std::size_t n = times.size();
  const Real t0 = times.front();
  const Real span = times.back() - t0;
  require(span > 0.0, ErrorKind::FitRejected, "samples span zero time");

  std::vector<Real> t(n);
  for (std::size_t i = 0; i < n; ++i) t[i] = times[i] - t0;
  Real mean = 0.0;
  for (Real v : values) mean += v;
  mean /= static_cast<Real>(n);

  const auto [best_k, d_omega] = strongest_bin(t, values, mean);

  auto sse = [&](Real omega) { return project(t, values, omega).sse; };
  const Real lo = std::max(0.25, best_k - 2.0) * d_omega;
  const Real hi = (best_k + 2.0) * d_omega;
  const Real omega = polish(t, values, boost::math::tools::brent_find_minima(sse, lo, hi, 50).first);
  const LinearFit lf = project(t, values, omega);

  RabiFit fit;
  fit.rate = 0.5 * omega;
  fit.seed_rate = 0.5 * best_k * d_omega;
  fit.amplitude = std::hypot(lf.a, lf.b);
  // a cos + b sin = A cos(w t - atan2(b, a)), with t measured from t0.
  fit.phase = std::remainder(-std::atan2(lf.b, lf.a) - omega * t0, 2.0 * std::numbers::pi);
  fit.offset = lf.c;
  fit.residual_rms = std::sqrt(lf.sse / static_cast<Real>(n));
  fit.raw_residual_rms = fit.residual_rms;
  fit.samples = static_cast<int>(n);

  const Real periods = span * omega / (2.0 * std::numbers::pi);
  if (periods < 1.5) {
    std::ostringstream os;
    os << "record covers " << periods << " oscillation periods, fewer than 1.5 (rate "
       << fit.rate << ")";
    fail(ErrorKind::FitRejected, os.str());
  }
  if (!(fit.residual_rms < 0.1 * fit.amplitude)) {
    std::ostringstream os;
    os << "Rabi fit rejected: residual rms " << fit.residual_rms << " vs amplitude "
       << fit.amplitude << " (rate " << fit.rate << ", offset " << fit.offset << ", "
       << n << " samples)";
    fail(ErrorKind::FitRejected, os.str());
  }
  return fit;
}

RabiFit fit_rabi(const Trajectory& trajectory, const std::string& selector,
                 const RabiFitOptions& options) {
  return fit_rabi(trajectory.times, trajectory.series(selector), options);
}

Real refine_resonance(const Scenario& scenario, const SweepResult& sweep) {
  require(sweep.grid_spacing > 0.0 && sweep.horizon > 0.0, ErrorKind::Domain,
          "refinement needs a completed sweep");
  const Real lo = sweep.peak_eta - 2.0 * sweep.grid_spacing;
  const Real hi = sweep.peak_eta + 2.0 * sweep.grid_spacing;
  auto loss = [&](Real eta) { return -max_transfer(scenario, eta, sweep.horizon); };
  boost::uintmax_t iterations = 60;
  const auto [eta, value] = boost::math::tools::brent_find_minima(loss, lo, hi, 40, iterations);
  (void)value;
  return eta;
}

Trajectory evolve_scenario(const Scenario& scenario, Real eta, Real t_end, long stride) {
  require(eta > 0.0 && t_end > 0.0, ErrorKind::Domain, "need positive drive frequency and end time");
  const Real period = 2.0 * std::numbers::pi / eta;
  long periods = static_cast<long>(std::ceil(t_end / period));
  periods = std::max(stride, (periods + stride - 1) / stride * stride);
  EvolveOptions opts = scenario.evolve;
  opts.tracked = scenario.target_indices();
  return evolve_stroboscopic(scenario.hamiltonian(eta), scenario.initial, periods, stride, opts);
}

}  // namespace dicke
