#ifndef SDEBRIDGE_PROPOSALS_HPP
#define SDEBRIDGE_PROPOSALS_HPP

#include <optional>
#include <string>
#include <vector>

#include "sdebridge/core.hpp"
#include "sdebridge/euler.hpp"
#include "sdebridge/linalg.hpp"
#include "sdebridge/paths.hpp"

namespace sdebridge {

enum class ProposalKind { Fs, Mdb, RbOde, RbLna, RbBarOde, RbBarLna };

inline const char* proposal_name(ProposalKind kind) {
  switch (kind) {
    case ProposalKind::Fs: return "fs";
    case ProposalKind::Mdb: return "mdb";
    case ProposalKind::RbOde: return "rb-ode";
    case ProposalKind::RbLna: return "rb-lna";
    case ProposalKind::RbBarOde: return "rbbar-ode";
    case ProposalKind::RbBarLna: return "rbbar-lna";
  }
  return "?";
}

inline std::optional<ProposalKind> parse_proposal(const std::string& name) {
  if (name == "fs") return ProposalKind::Fs;
  if (name == "mdb") return ProposalKind::Mdb;
  if (name == "rb-ode") return ProposalKind::RbOde;
  if (name == "rb-lna") return ProposalKind::RbLna;
  if (name == "rbbar-ode") return ProposalKind::RbBarOde;
  if (name == "rbbar-lna") return ProposalKind::RbBarLna;
  return std::nullopt;
}

inline bool proposal_uses_xi(ProposalKind kind) {
  return kind != ProposalKind::Fs && kind != ProposalKind::Mdb;
}

inline bool proposal_uses_suffix_stats(ProposalKind kind) {
  return kind == ProposalKind::RbBarOde || kind == ProposalKind::RbBarLna;
}

inline XiKind xi_kind_for(ProposalKind kind) {
  return (kind == ProposalKind::RbLna || kind == ProposalKind::RbBarLna) ? XiKind::LnaConditioned
                                                                         : XiKind::Ode;
}

/// One-step proposal x_{k+1} | x_k ~ N(mean, cov).
struct StepConditional {
  VectorXd mean;
  MatrixXd cov;
  ProposalKind kind = ProposalKind::Fs;
};

/// Suffix sums over j = k+1..K-1 of A_j := sigma(xi_j, t_j), built in one
/// backward pass so each step's terminal covariance costs O(d^2).
/// When the model factorizes as sigma = S diag(lambda), r-vector sums of
/// lambda and lambda^2 replace the matrix sums.
struct SigmaSuffixStats {
  bool factorized = false;
  std::vector<int> count;                 // K-1-k terms remain after step k
  std::vector<MatrixXd> sum_sigma;        // sum A_j            (d x r)
  std::vector<MatrixXd> sum_sigma_outer;  // sum A_j A_j^T      (d x d)
  std::vector<VectorXd> sum_lambda;       // sum lambda_j       (r)
  std::vector<VectorXd> sum_lambda_sq;    // sum lambda_j^2     (r)
};

inline SigmaSuffixStats sigma_suffix_stats(const DeterministicPath& xi, const DiffusionModel& model,
                                           const TimeGrid& grid) {
  const int k_steps = grid.n_steps();
  SigmaSuffixStats stats;
  stats.factorized = model.factorization.has_value();
  stats.count.resize(k_steps);

  if (stats.factorized) {
    const int r = model.noise_dim;
    stats.sum_lambda.assign(k_steps, VectorXd::Zero(r));
    stats.sum_lambda_sq.assign(k_steps, VectorXd::Zero(r));
    for (int k = k_steps - 2; k >= 0; --k) {
      const VectorXd& lam = xi.lambda_at[k + 1];
      stats.sum_lambda[k] = stats.sum_lambda[k + 1] + lam;
      stats.sum_lambda_sq[k] = stats.sum_lambda_sq[k + 1] + lam.cwiseProduct(lam);
    }
  } else {
    const int d = model.dim, r = model.noise_dim;
    stats.sum_sigma.assign(k_steps, MatrixXd::Zero(d, r));
    stats.sum_sigma_outer.assign(k_steps, MatrixXd::Zero(d, d));
    for (int k = k_steps - 2; k >= 0; --k) {
      const MatrixXd& a = xi.sigma_at[k + 1];
      stats.sum_sigma[k] = stats.sum_sigma[k + 1] + a;
      stats.sum_sigma_outer[k] = stats.sum_sigma_outer[k + 1] + a * a.transpose();
    }
  }
  for (int k = 0; k < k_steps; ++k) stats.count[k] = k_steps - 1 - k;
  return stats;
}

/// Terminal covariance of the path-following construct:
///   Psi_K = dt * [ zeta(x_k,t_k) + sum_{j=k+1}^{K-1} (A_j + D)(A_j + D)^T ],
/// with D = sigma(x_k,t_k) - sigma(xi_k,t_k). The sum expands onto the
/// precomputed suffix statistics.
inline MatrixXd rbbar_terminal_cov(const DiffusionModel& model, const VectorXd& x, int k,
                                   const TimeGrid& grid, const DeterministicPath& xi,
                                   const SigmaSuffixStats& stats) {
  const double t = grid.time_at(k);
  MatrixXd acc = model.zeta(x, t);
  const double n_terms = static_cast<double>(stats.count[k]);

  if (stats.factorized) {
    const VectorXd e = model.factorization->lambda_diag(x, t) - xi.lambda_at[k];
    const VectorXd diag = stats.sum_lambda_sq[k] + 2.0 * e.cwiseProduct(stats.sum_lambda[k]) +
                          n_terms * e.cwiseProduct(e);
    const MatrixXd& s = model.factorization->stoichiometry;
    acc.noalias() += s * diag.asDiagonal() * s.transpose();
  } else {
    const MatrixXd dsig = model.sigma(x, t) - xi.sigma_at[k];
    const MatrixXd cross = stats.sum_sigma[k] * dsig.transpose();
    acc += stats.sum_sigma_outer[k] + cross + cross.transpose() +
           n_terms * dsig * dsig.transpose();
  }
  MatrixXd psi = grid.step() * acc;
  return 0.5 * (psi + psi.transpose());
}

namespace detail {

// Shared Gaussian conditioning: given the joint of (X_{k+1}, Y) with
//   X_{k+1} mean   x + dt*mu
//   Y mean         P (x + terminal_shift)
//   Cov(X_{k+1},Y) dt * zeta * P^T
//   Var(Y)         P * terminal_cov * P^T + Sigma
// returns the conditional mean and covariance given Y = y.
inline StepConditional condition_step(const VectorXd& x, const VectorXd& mu, const MatrixXd& zeta,
                                      double dt, const VectorXd& terminal_shift,
                                      const MatrixXd& terminal_cov, const ObservationModel& obs,
                                      ProposalKind kind) {
  const MatrixXd& p = obs.projection;
  const MatrixXd cross = dt * (zeta * p.transpose());          // d x r_obs
  const MatrixXd innov = p * terminal_cov * p.transpose() + obs.noise_cov;
  const auto llt = spd_cholesky(innov, "step conditional");

  const VectorXd resid = obs.value - p * (x + terminal_shift);
  StepConditional sc;
  sc.kind = kind;
  sc.mean = x + dt * mu + cross * llt.solve(resid);
  MatrixXd v = dt * zeta - cross * llt.solve(cross.transpose());
  sc.cov = 0.5 * (v + v.transpose());
  return sc;
}

}  // namespace detail

/// Forward-simulation step: the plain Euler-Maruyama transition, ignoring y.
inline StepConditional fs_step_conditional(const DiffusionModel& model, const VectorXd& x, int k,
                                           const TimeGrid& grid) {
  EmMoments m = em_mean_cov(model, x, grid.time_at(k), grid.step());
  return {std::move(m.mean), std::move(m.cov), ProposalKind::Fs};
}

/// Modified diffusion bridge: drift and volatility frozen at (x_k, t_k),
/// conditioned on the terminal observation.
inline StepConditional mdb_conditional(const DiffusionModel& model, const VectorXd& x, int k,
                                       const TimeGrid& grid, const ObservationModel& obs) {
  const double t = grid.time_at(k);
  const double tau = grid.remaining(k);
  model.require_valid(x, t);
  const VectorXd mu = model.drift(x, t);
  const MatrixXd zeta = model.zeta(x, t);
  return detail::condition_step(x, mu, zeta, grid.step(), tau * mu, tau * zeta, obs,
                                ProposalKind::Mdb);
}

/// Residual bridge: the frozen-coefficient conditioning applied to the
/// residual around xi, then shifted back. xi' is the chord
/// (xi_{k+1} - xi_k)/dt.
inline StepConditional rb_conditional(const DiffusionModel& model, const VectorXd& x, int k,
                                      const TimeGrid& grid, const ObservationModel& obs,
                                      const DeterministicPath& xi) {
  const double t = grid.time_at(k);
  const double tau = grid.remaining(k);
  model.require_valid(x, t);
  const VectorXd mu = model.drift(x, t);
  const MatrixXd zeta = model.zeta(x, t);
  const VectorXd chord = (xi.xi[k + 1] - xi.xi[k]) / grid.step();
  const VectorXd shift = (xi.xi.back() - xi.xi[k]) + tau * (mu - chord);
  StepConditional sc =
      detail::condition_step(x, mu, zeta, grid.step(), shift, tau * zeta, obs, ProposalKind::RbOde);
  sc.kind = xi.kind == XiKind::Ode ? ProposalKind::RbOde : ProposalKind::RbLna;
  return sc;
}

/// Path-following residual bridge: same conditional mean structure as the
/// residual bridge, with the terminal covariance tracking sigma along xi.
inline StepConditional rbbar_conditional(const DiffusionModel& model, const VectorXd& x, int k,
                                         const TimeGrid& grid, const ObservationModel& obs,
                                         const DeterministicPath& xi,
                                         const SigmaSuffixStats& stats) {
  const double t = grid.time_at(k);
  const double tau = grid.remaining(k);
  model.require_valid(x, t);
  const VectorXd mu = model.drift(x, t);
  const MatrixXd zeta = model.zeta(x, t);
  const VectorXd chord = (xi.xi[k + 1] - xi.xi[k]) / grid.step();
  const VectorXd shift = (xi.xi.back() - xi.xi[k]) + tau * (mu - chord);
  const MatrixXd psi = rbbar_terminal_cov(model, x, k, grid, xi, stats);
  StepConditional sc =
      detail::condition_step(x, mu, zeta, grid.step(), shift, psi, obs, ProposalKind::RbBarOde);
  sc.kind = xi.kind == XiKind::Ode ? ProposalKind::RbBarOde : ProposalKind::RbBarLna;
  return sc;
}

inline StepConditional step_conditional(ProposalKind kind, const DiffusionModel& model,
                                        const VectorXd& x, int k, const TimeGrid& grid,
                                        const ObservationModel& obs,
                                        const DeterministicPath* xi = nullptr,
                                        const SigmaSuffixStats* stats = nullptr) {
  switch (kind) {
    case ProposalKind::Fs:
      return fs_step_conditional(model, x, k, grid);
    case ProposalKind::Mdb:
      return mdb_conditional(model, x, k, grid, obs);
    case ProposalKind::RbOde:
    case ProposalKind::RbLna:
      if (!xi) throw std::invalid_argument("step_conditional: residual bridge requires xi");
      return rb_conditional(model, x, k, grid, obs, *xi);
    case ProposalKind::RbBarOde:
    case ProposalKind::RbBarLna:
      if (!xi || !stats) {
        throw std::invalid_argument("step_conditional: rbbar requires xi and suffix stats");
      }
      return rbbar_conditional(model, x, k, grid, obs, *xi, *stats);
  }
  throw std::logic_error("step_conditional: unknown proposal kind");
}

}  // namespace sdebridge

#endif  // SDEBRIDGE_PROPOSALS_HPP
