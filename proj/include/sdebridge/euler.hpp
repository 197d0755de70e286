#ifndef SDEBRIDGE_EULER_HPP
#define SDEBRIDGE_EULER_HPP

#include <cmath>

#include "sdebridge/core.hpp"
#include "sdebridge/linalg.hpp"

namespace sdebridge {

struct EmMoments {
  VectorXd mean;  // x + dt * mu(x, t)
  MatrixXd cov;   // dt * zeta(x, t)
};

/// Mean and covariance of the one-step Euler-Maruyama Gaussian transition.
inline EmMoments em_mean_cov(const DiffusionModel& model, const VectorXd& x, double t, double dt) {
  model.require_valid(x, t);
  if (!(dt > 0.0)) throw std::invalid_argument("em_mean_cov: dt must be positive");
  return {x + dt * model.drift(x, t), dt * model.zeta(x, t)};
}

/// Log of the Euler-Maruyama transition density of x_next given x.
inline double em_log_density(const DiffusionModel& model, const VectorXd& x_next,
                             const VectorXd& x, double t, double dt) {
  const EmMoments m = em_mean_cov(model, x, t, dt);
  return log_gaussian(x_next, m.mean, m.cov);
}

/// One forward Euler-Maruyama step driven by an r-vector of standard normals.
inline VectorXd em_forward_step(const DiffusionModel& model, const VectorXd& x, double t,
                                double dt, const VectorXd& noise) {
  model.require_valid(x, t);
  if (!(dt > 0.0)) throw std::invalid_argument("em_forward_step: dt must be positive");
  return x + dt * model.drift(x, t) + std::sqrt(dt) * (model.sigma(x, t) * noise);
}

}  // namespace sdebridge

#endif  // SDEBRIDGE_EULER_HPP
