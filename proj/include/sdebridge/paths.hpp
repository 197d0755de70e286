#ifndef SDEBRIDGE_PATHS_HPP
#define SDEBRIDGE_PATHS_HPP

#include <string>
#include <vector>

#include "sdebridge/core.hpp"
#include "sdebridge/linalg.hpp"
#include "sdebridge/ode.hpp"

namespace sdebridge {

/// Vector-valued ODE solution sampled at every grid point.
struct OdeSolution {
  std::vector<VectorXd> values;  // K+1 entries
  OdeDiagnostics diagnostics;
};

/// Matrix-valued companion (generator G, residual covariance phi, psi).
struct MatrixOdeSolution {
  std::vector<MatrixXd> values;  // K+1 entries
  OdeDiagnostics diagnostics;
};

enum class XiKind { Ode, LnaConditioned };

/// Deterministic skeleton xi with the volatility factors cached along it.
struct DeterministicPath {
  XiKind kind = XiKind::Ode;
  std::vector<VectorXd> xi;         // K+1
  std::vector<MatrixXd> sigma_at;   // sigma(xi_k, t_k)
  std::vector<VectorXd> lambda_at;  // diag Lambda(xi_k, t_k) when factorized, else empty
};

/// d mu / d x at (x, t): the model's analytic Jacobian when supplied,
/// otherwise central finite differences with h_j = 1e-5 * (1 + |x_j|).
inline MatrixXd jacobian_at(const DiffusionModel& model, const VectorXd& x, double t) {
  if (model.drift_jacobian) return model.drift_jacobian(x, t);
  const int d = model.dim;
  MatrixXd j(d, d);
  VectorXd xp = x, xm = x;
  for (int col = 0; col < d; ++col) {
    const double h = 1e-5 * (1.0 + std::abs(x[col]));
    xp[col] = x[col] + h;
    xm[col] = x[col] - h;
    j.col(col) = (model.drift(xp, t) - model.drift(xm, t)) / (2.0 * h);
    xp[col] = x[col];
    xm[col] = x[col];
  }
  return j;
}

namespace detail {

// Symmetric matrices ride through the integrator as their packed lower
// triangle, which keeps them symmetric by construction.
inline int sym_size(int d) { return d * (d + 1) / 2; }

inline void pack_sym(const MatrixXd& m, double* out) {
  int idx = 0;
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j <= i; ++j) out[idx++] = m(i, j);
}

inline MatrixXd unpack_sym(const double* in, int d) {
  MatrixXd m(d, d);
  int idx = 0;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j <= i; ++j) {
      m(i, j) = in[idx];
      m(j, i) = in[idx];
      ++idx;
    }
  return m;
}

}  // namespace detail

/// Drift-only skeleton: d eta / dt = mu(eta, t), eta_0 = x0.
inline OdeSolution solve_eta(const DiffusionModel& model, const TimeGrid& grid,
                             const VectorXd& x0, const OdeOptions& opt = {}) {
  model.require_valid(x0, 0.0);
  OdeRhs rhs = [&model](double t, const VectorXd& y, VectorXd& dydt) {
    dydt = model.drift(y, t);
  };
  OdeSolution sol;
  sol.values = integrate_on_grid(rhs, x0, grid, opt, &sol.diagnostics);
  return sol;
}

/// Generator and residual covariance of the linearized residual process:
///   dG/dt   = J(eta_t, t) G,                          G_0   = I
///   dphi/dt = J phi + phi J^T + zeta(eta_t, t),       phi_0 = 0
/// eta is re-integrated jointly so the stage evaluations stay consistent.
inline std::pair<MatrixOdeSolution, MatrixOdeSolution> solve_lna(const DiffusionModel& model,
                                                                 const TimeGrid& grid,
                                                                 const OdeSolution& eta,
                                                                 const OdeOptions& opt = {}) {
  const int d = model.dim;
  const int ns = detail::sym_size(d);
  const int total = d + d * d + ns;

  OdeRhs rhs = [&model, d, ns](double t, const VectorXd& y, VectorXd& dydt) {
    dydt.resize(y.size());
    const VectorXd e = y.head(d);
    const Eigen::Map<const MatrixXd> g(y.data() + d, d, d);
    const MatrixXd phi = detail::unpack_sym(y.data() + d + d * d, d);

    const MatrixXd j = jacobian_at(model, e, t);
    dydt.head(d) = model.drift(e, t);
    Eigen::Map<MatrixXd>(dydt.data() + d, d, d) = j * g;
    const MatrixXd jphi = j * phi;
    const MatrixXd dphi = jphi + jphi.transpose() + model.zeta(e, t);
    detail::pack_sym(dphi, dydt.data() + d + d * d);
  };

  VectorXd y0 = VectorXd::Zero(total);
  y0.head(d) = eta.values.front();
  Eigen::Map<MatrixXd>(y0.data() + d, d, d) = MatrixXd::Identity(d, d);

  OdeDiagnostics diag;
  const auto states = integrate_on_grid(rhs, y0, grid, opt, &diag);

  MatrixOdeSolution g_sol, phi_sol;
  g_sol.diagnostics = diag;
  phi_sol.diagnostics = diag;
  g_sol.values.reserve(states.size());
  phi_sol.values.reserve(states.size());
  for (const auto& y : states) {
    g_sol.values.emplace_back(Eigen::Map<const MatrixXd>(y.data() + d, d, d));
    phi_sol.values.push_back(detail::unpack_sym(y.data() + d + d * d, d));
  }
  return {std::move(g_sol), std::move(phi_sol)};
}

/// Test oracle: d psi / dt = G^{-1} zeta(eta_t, t) G^{-T}, psi_0 = 0, so that
/// G_t psi_t G_t^T reproduces phi_t.
inline MatrixOdeSolution solve_psi(const DiffusionModel& model, const TimeGrid& grid,
                                   const OdeSolution& eta, const OdeOptions& opt = {}) {
  const int d = model.dim;
  const int ns = detail::sym_size(d);
  const int total = d + d * d + ns;

  OdeRhs rhs = [&model, d, ns](double t, const VectorXd& y, VectorXd& dydt) {
    dydt.resize(y.size());
    const VectorXd e = y.head(d);
    const Eigen::Map<const MatrixXd> g(y.data() + d, d, d);

    Eigen::PartialPivLU<MatrixXd> lu(g);
    const MatrixXd ginv_zeta = lu.solve(model.zeta(e, t));
    const MatrixXd dpsi = lu.solve(ginv_zeta.transpose()).transpose();
    if (!dpsi.allFinite()) throw NumericFailure("solve_psi: generator numerically singular");

    const MatrixXd j = jacobian_at(model, e, t);
    dydt.head(d) = model.drift(e, t);
    Eigen::Map<MatrixXd>(dydt.data() + d, d, d) = j * g;
    detail::pack_sym(0.5 * (dpsi + dpsi.transpose()), dydt.data() + d + d * d);
  };

  VectorXd y0 = VectorXd::Zero(total);
  y0.head(d) = eta.values.front();
  Eigen::Map<MatrixXd>(y0.data() + d, d, d) = MatrixXd::Identity(d, d);

  MatrixOdeSolution psi_sol;
  const auto states = integrate_on_grid(rhs, y0, grid, opt, &psi_sol.diagnostics);
  psi_sol.values.reserve(states.size());
  for (const auto& y : states) {
    psi_sol.values.push_back(detail::unpack_sym(y.data() + d + d * d, d));
  }
  return psi_sol;
}

/// E(residual_t | y) = phi_t G_t^{-T} G_T^T P^T (P phi_T P^T + Sigma)^{-1} (y - P eta_T)
/// at every grid point. G^{-T} is applied by a solve against G_t^T.
inline std::vector<VectorXd> conditioned_residual_mean(const MatrixOdeSolution& generator,
                                                       const MatrixOdeSolution& covariance,
                                                       const OdeSolution& eta,
                                                       const ObservationModel& obs) {
  const MatrixXd& p = obs.projection;
  const MatrixXd& g_end = generator.values.back();
  const MatrixXd& phi_end = covariance.values.back();

  const MatrixXd innov = p * phi_end * p.transpose() + obs.noise_cov;
  const VectorXd w =
      spd_cholesky(innov, "conditioned_residual_mean").solve(obs.value - p * eta.values.back());
  const VectorXd u = g_end.transpose() * (p.transpose() * w);

  std::vector<VectorXd> mean;
  mean.reserve(eta.values.size());
  for (std::size_t k = 0; k < eta.values.size(); ++k) {
    Eigen::PartialPivLU<MatrixXd> lu(generator.values[k].transpose());
    const VectorXd z = lu.solve(u);
    if (!z.allFinite()) throw NumericFailure("conditioned_residual_mean: singular generator");
    mean.push_back(covariance.values[k] * z);
  }
  return mean;
}

/// Builds the deterministic skeleton xi (drift-only, or shifted by the
/// conditional residual mean) and caches sigma along it.
inline DeterministicPath build_xi(XiKind kind, const DiffusionModel& model, const TimeGrid& grid,
                                  const VectorXd& x0, const ObservationModel* obs = nullptr,
                                  const OdeOptions& opt = {}) {
  if (kind == XiKind::LnaConditioned && obs == nullptr) {
    throw std::invalid_argument("build_xi: conditioned path requires an observation");
  }

  DeterministicPath path;
  path.kind = kind;
  const OdeSolution eta = solve_eta(model, grid, x0, opt);

  if (kind == XiKind::Ode) {
    path.xi = eta.values;
  } else {
    const auto [g, phi] = solve_lna(model, grid, eta, opt);
    const auto shift = conditioned_residual_mean(g, phi, eta, *obs);
    path.xi.reserve(eta.values.size());
    for (std::size_t k = 0; k < eta.values.size(); ++k) {
      path.xi.push_back(eta.values[k] + shift[k]);
    }
  }

  path.sigma_at.reserve(path.xi.size());
  const bool fact = model.factorization.has_value();
  if (fact) path.lambda_at.reserve(path.xi.size());
  for (std::size_t k = 0; k < path.xi.size(); ++k) {
    const double t = grid.time_at(static_cast<int>(k));
    if (!model.is_valid_state(path.xi[k])) {
      throw DomainViolation("build_xi: deterministic path leaves the model domain at grid index " +
                            std::to_string(k));
    }
    path.sigma_at.push_back(model.sigma(path.xi[k], t));
    if (fact) path.lambda_at.push_back(model.factorization->lambda_diag(path.xi[k], t));
  }
  return path;
}

}  // namespace sdebridge

#endif  // SDEBRIDGE_PATHS_HPP
