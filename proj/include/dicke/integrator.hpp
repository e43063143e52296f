#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>

#include "dicke/errors.hpp"

namespace dicke {

struct StepperOptions {
  double rtol = 1e-10;
  double atol = 1e-10;
  double h_max = std::numeric_limits<double>::infinity();
  double h_min = 1e-13;
  long max_steps = 200'000'000;
};

struct StepperStats {
  long steps = 0;
  long rejected = 0;
  long rhs_evals = 0;
  double last_h = 0.0;
};

/// Dormand-Prince 5(4) with PI step-size control and FSAL.
///
/// `State` is any Eigen dense type (vector or matrix, real or complex).
/// integrate() lands exactly on the requested end time, so callers sample
/// on a grid by integrating interval by interval.
template <class State>
class DormandPrince {
 public:
  using Rhs = std::function<void(double t, const State& y, State& dydt)>;
  // Applied to every accepted state and its FSAL derivative.
  using Hook = std::function<void(State& y, State& dydt)>;

  DormandPrince(Rhs rhs, StepperOptions opts, Hook on_accept = {})
      : rhs_(std::move(rhs)), opts_(opts), on_accept_(std::move(on_accept)) {}

  const StepperStats& stats() const { return stats_; }

  void integrate(double& t, State& y, double t_end) {
    if (t_end <= t) return;
    if (!fsal_valid_ || fsal_t_ != t) {
      eval(t, y, k1_);
      fsal_valid_ = true;
      fsal_t_ = t;
    }
    if (h_ <= 0.0) h_ = initial_step(t, y, t_end);

    while (t < t_end) {
      if (stats_.steps + stats_.rejected > opts_.max_steps) {
        std::ostringstream os;
        os << "integrator exceeded " << opts_.max_steps << " steps at t = " << t
           << " (h = " << h_ << ", rejected " << stats_.rejected << ")";
        fail(ErrorKind::Numeric, os.str());
      }
      double h = std::min(h_, opts_.h_max);
      bool landing = false;
      if (t + h >= t_end || t_end - (t + h) < 1e-3 * h) {
        h = t_end - t;
        landing = true;
      }
      const double err = try_step(t, y, h);
      if (!std::isfinite(err)) {
        std::ostringstream os;
        os << "non-finite error estimate at t = " << t << " with h = " << h;
        fail(ErrorKind::Numeric, os.str());
      }
      if (err <= 1.0) {
        t = landing ? t_end : t + h;
        y.swap(y_new_);
        k1_.swap(k7_);
        if (on_accept_) on_accept_(y, k1_);
        fsal_t_ = t;
        ++stats_.steps;
        stats_.last_h = h;
        double fac = kSafety * std::pow(err, -kExpo) * std::pow(err_old_, kBeta);
        fac = std::clamp(fac, 0.2, 10.0);
        if (rejected_last_) fac = std::min(fac, 1.0);
        const double proposal = h * fac;
        // A landing step may be artificially short; keep the old proposal.
        h_ = landing ? std::max(h_, proposal) : proposal;
        err_old_ = std::max(err, 1e-4);
        rejected_last_ = false;
      } else {
        ++stats_.rejected;
        h_ = h * std::max(0.2, kSafety * std::pow(err, -kExpo));
        rejected_last_ = true;
        if (h_ < opts_.h_min) {
          std::ostringstream os;
          os << "step size underflow at t = " << t << " (h = " << h_ << ", error ratio " << err
             << ", " << stats_.steps << " accepted / " << stats_.rejected << " rejected)";
          fail(ErrorKind::Numeric, os.str());
        }
      }
    }
  }

 private:
  static constexpr double kSafety = 0.9;
  static constexpr double kBeta = 0.04;
  static constexpr double kExpo = 0.2 - 0.75 * kBeta;

  void eval(double t, const State& y, State& out) {
    rhs_(t, y, out);
    ++stats_.rhs_evals;
  }

  double error_norm(const State& err, const State& y0, const State& y1) const {
    // Squared moduli avoid a hypot call per element.
    const auto scale =
        opts_.atol + opts_.rtol * y0.array().abs2().max(y1.array().abs2()).sqrt();
    const double sum = (err.array().abs2() / scale.square()).sum();
    return std::sqrt(sum / static_cast<double>(err.size()));
  }

  double initial_step(double t, const State& y, double t_end) {
    const auto scale = opts_.atol + opts_.rtol * y.array().abs();
    const double d0 = std::sqrt((y.array().abs() / scale).square().mean());
    const double d1 = std::sqrt((k1_.array().abs() / scale).square().mean());
    double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    h0 = std::min({h0, opts_.h_max, t_end - t});
    State y1 = y + h0 * k1_;
    eval(t + h0, y1, tmp_);
    const double d2 = std::sqrt(((tmp_ - k1_).array().abs() / scale).square().mean()) / h0;
    const double dmax = std::max(d1, d2);
    const double h1 = dmax <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / dmax, 0.2);
    return std::min({100.0 * h0, h1, opts_.h_max});
  }

  double try_step(double t, const State& y, double h) {
    constexpr double a21 = 1.0 / 5.0;
    constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
    constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
    constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0,
                     a53 = 64448.0 / 6561.0, a54 = -212.0 / 729.0;
    constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0,
                     a64 = 49.0 / 176.0, a65 = -5103.0 / 18656.0;
    constexpr double b1 = 35.0 / 384.0, b3 = 500.0 / 1113.0, b4 = 125.0 / 192.0,
                     b5 = -2187.0 / 6784.0, b6 = 11.0 / 84.0;
    constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0,
                     e5 = -17253.0 / 339200.0, e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;

    tmp_ = y + (h * a21) * k1_;
    eval(t + h / 5.0, tmp_, k2_);
    tmp_ = y + h * (a31 * k1_ + a32 * k2_);
    eval(t + 3.0 * h / 10.0, tmp_, k3_);
    tmp_ = y + h * (a41 * k1_ + a42 * k2_ + a43 * k3_);
    eval(t + 4.0 * h / 5.0, tmp_, k4_);
    tmp_ = y + h * (a51 * k1_ + a52 * k2_ + a53 * k3_ + a54 * k4_);
    eval(t + 8.0 * h / 9.0, tmp_, k5_);
    tmp_ = y + h * (a61 * k1_ + a62 * k2_ + a63 * k3_ + a64 * k4_ + a65 * k5_);
    eval(t + h, tmp_, k6_);
    y_new_ = y + h * (b1 * k1_ + b3 * k3_ + b4 * k4_ + b5 * k5_ + b6 * k6_);
    eval(t + h, y_new_, k7_);
    err_ = h * (e1 * k1_ + e3 * k3_ + e4 * k4_ + e5 * k5_ + e6 * k6_ + e7 * k7_);
    return error_norm(err_, y, y_new_);
  }

  Rhs rhs_;
  StepperOptions opts_;
  Hook on_accept_;
  StepperStats stats_;
  double h_ = 0.0;
  double err_old_ = 1e-4;
  bool rejected_last_ = false;
  bool fsal_valid_ = false;
  double fsal_t_ = 0.0;
  State k1_, k2_, k3_, k4_, k5_, k6_, k7_, tmp_, y_new_, err_;
};

}  // namespace dicke
