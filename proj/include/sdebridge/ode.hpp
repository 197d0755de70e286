#ifndef SDEBRIDGE_ODE_HPP
#define SDEBRIDGE_ODE_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "sdebridge/core.hpp"

namespace sdebridge {

/// Right-hand side of dy/dt = f(t, y), written into dydt.
using OdeRhs = std::function<void(double, const VectorXd&, VectorXd&)>;

struct OdeOptions {
  double abs_tol = 1e-8;
  double rel_tol = 1e-6;
};

struct OdeDiagnostics {
  long steps_accepted = 0;
  long steps_rejected = 0;
  double max_error_estimate = 0.0;  // largest accepted scaled error
};

namespace detail {

// Dormand-Prince 5(4) pair.
struct Dopri54 {
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                          a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                          a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                          b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  // b - b_hat, for the embedded 4th-order error estimate
  static constexpr double e1 = 35.0 / 384 - 5179.0 / 57600;
  static constexpr double e3 = 500.0 / 1113 - 7571.0 / 16695;
  static constexpr double e4 = 125.0 / 192 - 393.0 / 640;
  static constexpr double e5 = -2187.0 / 6784 + 92097.0 / 339200;
  static constexpr double e6 = 11.0 / 84 - 187.0 / 2100;
  static constexpr double e7 = -1.0 / 40;
};

}  // namespace detail

/// Integrates dy/dt = f(t, y) with an embedded Runge-Kutta 5(4) pair,
/// forcing the solution to land exactly on every grid point. Returns the
/// K+1 states at the grid points.
inline std::vector<VectorXd> integrate_on_grid(const OdeRhs& rhs, const VectorXd& y0,
                                               const TimeGrid& grid,
                                               const OdeOptions& opt = {},
                                               OdeDiagnostics* diag_out = nullptr) {
  using T = detail::Dopri54;
  const int n = static_cast<int>(y0.size());
  OdeDiagnostics diag;

  std::vector<VectorXd> out;
  out.reserve(grid.n_points());
  out.push_back(y0);

  VectorXd y = y0;
  VectorXd k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), ytmp(n), ynew(n), err(n);

  double h = grid.step();  // carried step suggestion across intervals
  bool have_k1 = false;    // FSAL: k7 of an accepted step is k1 of the next

  for (int seg = 0; seg < grid.n_steps(); ++seg) {
    double t = grid.time_at(seg);
    const double t_end = grid.time_at(seg + 1);

    while (t < t_end) {
      double dt = std::min(h, t_end - t);
      if (!(dt > std::ldexp(std::max(1.0, std::abs(t)), -48))) {
        throw NumericFailure("integrate_on_grid: step size underflow");
      }
      if (!have_k1) rhs(t, y, k1);

      ytmp = y + dt * (T::a21 * k1);
      rhs(t + T::c2 * dt, ytmp, k2);
      ytmp = y + dt * (T::a31 * k1 + T::a32 * k2);
      rhs(t + T::c3 * dt, ytmp, k3);
      ytmp = y + dt * (T::a41 * k1 + T::a42 * k2 + T::a43 * k3);
      rhs(t + T::c4 * dt, ytmp, k4);
      ytmp = y + dt * (T::a51 * k1 + T::a52 * k2 + T::a53 * k3 + T::a54 * k4);
      rhs(t + T::c5 * dt, ytmp, k5);
      ytmp = y + dt * (T::a61 * k1 + T::a62 * k2 + T::a63 * k3 + T::a64 * k4 + T::a65 * k5);
      rhs(t + dt, ytmp, k6);
      ynew = y + dt * (T::b1 * k1 + T::b3 * k3 + T::b4 * k4 + T::b5 * k5 + T::b6 * k6);
      rhs(t + dt, ynew, k7);

      err = dt * (T::e1 * k1 + T::e3 * k3 + T::e4 * k4 + T::e5 * k5 + T::e6 * k6 + T::e7 * k7);
      double err_norm = 0.0;
      for (int i = 0; i < n; ++i) {
        const double sc = opt.abs_tol + opt.rel_tol * std::max(std::abs(y[i]), std::abs(ynew[i]));
        const double e = err[i] / sc;
        err_norm += e * e;
      }
      err_norm = std::sqrt(err_norm / std::max(n, 1));

      if (err_norm <= 1.0) {
        t += dt;
        y.swap(ynew);
        k1.swap(k7);
        have_k1 = true;
        ++diag.steps_accepted;
        diag.max_error_estimate = std::max(diag.max_error_estimate, err_norm);
        const double grow = err_norm > 0.0 ? 0.9 * std::pow(err_norm, -0.2) : 5.0;
        h = dt * std::clamp(grow, 0.2, 5.0);
      } else {
        ++diag.steps_rejected;
        have_k1 = false;  // stages no longer valid at the retry point
        h = dt * std::clamp(0.9 * std::pow(err_norm, -0.2), 0.1, 0.9);
      }
    }
    out.push_back(y);
  }

  if (diag_out) *diag_out = diag;
  return out;
}

/// Classic fixed-step 4th-order Runge-Kutta from t0 to t1; used as a
/// convergence-order probe and as an independent reference integrator.
inline VectorXd rk4_fixed(const OdeRhs& rhs, VectorXd y, double t0, double t1, int n_steps) {
  const int n = static_cast<int>(y.size());
  const double dt = (t1 - t0) / n_steps;
  VectorXd k1(n), k2(n), k3(n), k4(n), ytmp(n);
  double t = t0;
  for (int s = 0; s < n_steps; ++s) {
    rhs(t, y, k1);
    ytmp = y + 0.5 * dt * k1;
    rhs(t + 0.5 * dt, ytmp, k2);
    ytmp = y + 0.5 * dt * k2;
    rhs(t + 0.5 * dt, ytmp, k3);
    ytmp = y + dt * k3;
    rhs(t + dt, ytmp, k4);
    y += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    t = t0 + (s + 1) * dt;
  }
  return y;
}

}  // namespace sdebridge

#endif  // SDEBRIDGE_ODE_HPP
