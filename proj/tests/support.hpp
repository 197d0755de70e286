// Shared test fixtures: dense Gaussian oracles, synthetic diffusions, and
// the closed-form birth-death quantities. Everything here stays independent
// of the solve/factorization routes used by the library.
#ifndef SDEBRIDGE_TESTS_SUPPORT_HPP
#define SDEBRIDGE_TESTS_SUPPORT_HPP

#include <cmath>
#include <random>

#include "sdebridge/importance.hpp"
#include "sdebridge/models.hpp"
#include "sdebridge/proposals.hpp"

namespace testsupport {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using sdebridge::DeterministicPath;
using sdebridge::DiffusionModel;
using sdebridge::ObservationModel;
using sdebridge::TimeGrid;
using sdebridge::XiKind;

inline double max_abs(const MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

/// Brute-force multivariate normal log density via explicit inverse and
/// determinant.
inline double dense_gaussian_logpdf(const VectorXd& x, const VectorXd& mean, const MatrixXd& cov) {
  const MatrixXd inv = cov.inverse();
  const VectorXd r = x - mean;
  return -0.5 * (static_cast<double>(x.size()) * std::log(2.0 * M_PI) +
                 std::log(cov.determinant()) + r.dot(inv * r));
}

struct ConditionedGaussian {
  VectorXd mean;
  MatrixXd cov;
};

/// Conditions the joint N([m1;m2], [[c11,c12],[c12^T,c22]]) on the second
/// block equalling y, by dense inversion.
inline ConditionedGaussian condition_joint(const VectorXd& m1, const VectorXd& m2,
                                           const MatrixXd& c11, const MatrixXd& c12,
                                           const MatrixXd& c22, const VectorXd& y) {
  const MatrixXd inv = c22.inverse();
  return {m1 + c12 * inv * (y - m2), c11 - c12 * inv * c12.transpose()};
}

inline VectorXd random_vec(std::mt19937_64& rng, int d, double scale = 1.0) {
  std::normal_distribution<double> normal;
  VectorXd v(d);
  for (int i = 0; i < d; ++i) v[i] = scale * normal(rng);
  return v;
}

inline MatrixXd random_matrix(std::mt19937_64& rng, int rows, int cols, double scale = 1.0) {
  std::normal_distribution<double> normal;
  MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = scale * normal(rng);
  return m;
}

inline MatrixXd random_spd(std::mt19937_64& rng, int d, double ridge = 0.3) {
  const MatrixXd a = random_matrix(rng, d, d);
  return a * a.transpose() + ridge * MatrixXd::Identity(d, d);
}

/// Synthetic diffusion with affine drift and a state- and time-dependent
/// diffusion factor whose square stays positive definite.
inline DiffusionModel synthetic_model(std::mt19937_64& rng, int d) {
  DiffusionModel m;
  m.name = "synthetic";
  m.dim = d;
  m.noise_dim = d;
  const VectorXd a = random_vec(rng, d);
  const MatrixXd b = random_matrix(rng, d, d, 0.4);
  const MatrixXd c0 = random_matrix(rng, d, d, 0.4) + 1.5 * MatrixXd::Identity(d, d);
  const MatrixXd c1 = random_matrix(rng, d, d, 0.3);
  m.drift = [a, b](const VectorXd& x, double) -> VectorXd { return a + b * x; };
  m.sigma = [c0, c1](const VectorXd& x, double t) -> MatrixXd {
    return c0 + std::sin(x.sum() + t) * c1;
  };
  auto sig = m.sigma;
  m.zeta = [sig](const VectorXd& x, double t) -> MatrixXd {
    const MatrixXd s = sig(x, t);
    return s * s.transpose();
  };
  m.drift_jacobian = [b](const VectorXd&, double) { return b; };
  return m;
}

/// Random deterministic skeleton (a seeded random walk) with the sigma
/// caches the proposals expect.
inline DeterministicPath random_xi(std::mt19937_64& rng, const DiffusionModel& model,
                                   const TimeGrid& grid, XiKind kind = XiKind::Ode) {
  DeterministicPath path;
  path.kind = kind;
  VectorXd x = random_vec(rng, model.dim);
  if (model.factorization) x = x.cwiseAbs() + VectorXd::Constant(model.dim, 1.0);
  for (int k = 0; k <= grid.n_steps(); ++k) {
    path.xi.push_back(x);
    const double t = grid.time_at(k);
    path.sigma_at.push_back(model.sigma(x, t));
    if (model.factorization) path.lambda_at.push_back(model.factorization->lambda_diag(x, t));
    VectorXd step = 0.3 * random_vec(rng, model.dim);
    if (model.factorization) {
      // keep the skeleton inside the nonnegative domain
      step = step.cwiseMax(-0.5 * x);
    }
    x = x + step;
  }
  return path;
}

/// dX = sin(t) dt + (1 + 0.5 sin t) dB: state-independent drift and a
/// time-varying diffusion coefficient.
inline DiffusionModel sine_model() {
  DiffusionModel m;
  m.name = "sine";
  m.dim = 1;
  m.noise_dim = 1;
  m.drift = [](const VectorXd&, double t) { return VectorXd::Constant(1, std::sin(t)); };
  m.sigma = [](const VectorXd&, double t) {
    return MatrixXd::Constant(1, 1, 1.0 + 0.5 * std::sin(t));
  };
  m.zeta = [](const VectorXd&, double t) {
    const double s = 1.0 + 0.5 * std::sin(t);
    return MatrixXd::Constant(1, 1, s * s);
  };
  m.drift_jacobian = [](const VectorXd&, double) { return MatrixXd::Zero(1, 1); };
  return m;
}

// Closed forms for the scalar birth-death fixture.
inline double bd_eta(double x0, double th1, double th2, double t) {
  return x0 * std::exp((th1 - th2) * t);
}
inline double bd_generator(double th1, double th2, double t) {
  return std::exp((th1 - th2) * t);
}
inline double bd_phi(double x0, double th1, double th2, double t) {
  const double lam = th1 - th2;
  return (th1 + th2) / lam * bd_eta(x0, th1, th2, t) * (std::exp(lam * t) - 1.0);
}

/// Terminal covariance of the path-following construct by direct summation,
/// independent of the suffix-sum expansion.
inline MatrixXd direct_rbbar_terminal(const DiffusionModel& model, const VectorXd& x, int k,
                                      const TimeGrid& grid, const DeterministicPath& xi) {
  const double t = grid.time_at(k);
  MatrixXd psi = grid.step() * model.zeta(x, t);
  const MatrixXd sig_x = model.sigma(x, t);
  for (int j = k + 1; j <= grid.n_steps() - 1; ++j) {
    const MatrixXd term = xi.sigma_at[j] + sig_x - xi.sigma_at[k];
    psi += grid.step() * term * term.transpose();
  }
  return psi;
}

// The three displayed joint distributions of (X_{k+1}, Y), conditioned on
// Y = y by the dense route.
inline ConditionedGaussian oracle_mdb(const DiffusionModel& model, const VectorXd& x, int k,
                                      const TimeGrid& grid, const ObservationModel& obs) {
  const double t = grid.time_at(k);
  const double dt = grid.step();
  const double tau = grid.horizon() - t;
  const VectorXd mu = model.drift(x, t);
  const MatrixXd zeta = model.zeta(x, t);
  const MatrixXd& p = obs.projection;
  const VectorXd m1 = x + dt * mu;
  const VectorXd m2 = p * x + tau * (p * mu);
  const MatrixXd c11 = dt * zeta;
  const MatrixXd c12 = dt * zeta * p.transpose();
  const MatrixXd c22 = tau * p * zeta * p.transpose() + obs.noise_cov;
  return condition_joint(m1, m2, c11, c12, c22, obs.value);
}

inline ConditionedGaussian oracle_rb(const DiffusionModel& model, const VectorXd& x, int k,
                                     const TimeGrid& grid, const ObservationModel& obs,
                                     const DeterministicPath& xi) {
  const double t = grid.time_at(k);
  const double dt = grid.step();
  const double tau = grid.horizon() - t;
  const VectorXd mu = model.drift(x, t);
  const MatrixXd zeta = model.zeta(x, t);
  const MatrixXd& p = obs.projection;
  const VectorXd chord = (xi.xi[k + 1] - xi.xi[k]) / dt;
  const VectorXd m1 = x + dt * mu;
  const VectorXd m2 = p * x + p * (xi.xi.back() - xi.xi[k]) + tau * (p * (mu - chord));
  const MatrixXd c11 = dt * zeta;
  const MatrixXd c12 = dt * zeta * p.transpose();
  const MatrixXd c22 = tau * p * zeta * p.transpose() + obs.noise_cov;
  return condition_joint(m1, m2, c11, c12, c22, obs.value);
}

inline ConditionedGaussian oracle_rbbar(const DiffusionModel& model, const VectorXd& x, int k,
                                        const TimeGrid& grid, const ObservationModel& obs,
                                        const DeterministicPath& xi) {
  const double t = grid.time_at(k);
  const double dt = grid.step();
  const double tau = grid.horizon() - t;
  const VectorXd mu = model.drift(x, t);
  const MatrixXd zeta = model.zeta(x, t);
  const MatrixXd& p = obs.projection;
  const VectorXd chord = (xi.xi[k + 1] - xi.xi[k]) / dt;
  const VectorXd m1 = x + dt * mu;
  const VectorXd m2 = p * x + p * (xi.xi.back() - xi.xi[k]) + tau * (p * (mu - chord));
  const MatrixXd psi = direct_rbbar_terminal(model, x, k, grid, xi);
  const MatrixXd c11 = dt * zeta;
  const MatrixXd c12 = dt * zeta * p.transpose();
  const MatrixXd c22 = p * psi * p.transpose() + obs.noise_cov;
  return condition_joint(m1, m2, c11, c12, c22, obs.value);
}

}  // namespace testsupport

#endif  // SDEBRIDGE_TESTS_SUPPORT_HPP
