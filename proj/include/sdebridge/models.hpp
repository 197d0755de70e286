#ifndef SDEBRIDGE_MODELS_HPP
#define SDEBRIDGE_MODELS_HPP

#include <cmath>
#include <string>
#include <vector>

#include "sdebridge/core.hpp"

namespace sdebridge {

namespace detail {
inline void require_positive(const VectorXd& theta, const char* model) {
  if ((theta.array() <= 0.0).any()) {
    throw std::invalid_argument(std::string(model) + ": rate parameters must be positive");
  }
}
inline bool nonnegative(const VectorXd& x) { return (x.array() >= 0.0).all(); }
}  // namespace detail

/// Prey/predator kinetics: prey reproduce at rate theta1, predation at
/// theta2, predator death at theta3. Chemical-Langevin volatility with the
/// reaction order (prey birth, predation, predator death).
inline DiffusionModel lotka_volterra(const VectorXd& theta) {
  if (theta.size() != 3) throw std::invalid_argument("lotka_volterra: theta must have 3 entries");
  detail::require_positive(theta, "lotka_volterra");
  const double th1 = theta[0], th2 = theta[1], th3 = theta[2];

  DiffusionModel m;
  m.name = "lv";
  m.dim = 2;
  m.noise_dim = 3;
  m.drift = [th1, th2, th3](const VectorXd& x, double) {
    VectorXd mu(2);
    mu << th1 * x[0] - th2 * x[0] * x[1], th2 * x[0] * x[1] - th3 * x[1];
    return mu;
  };
  MatrixXd stoich(2, 3);
  stoich << 1, -1, 0,
            0, 1, -1;
  auto lambda = [th1, th2, th3](const VectorXd& x, double) {
    VectorXd lam(3);
    lam << std::sqrt(th1 * x[0]), std::sqrt(th2 * x[0] * x[1]), std::sqrt(th3 * x[1]);
    return lam;
  };
  m.sigma = [stoich, lambda](const VectorXd& x, double t) -> MatrixXd {
    return stoich * lambda(x, t).asDiagonal();
  };
  m.zeta = [th1, th2, th3](const VectorXd& x, double) {
    const double predation = th2 * x[0] * x[1];
    MatrixXd z(2, 2);
    z << th1 * x[0] + predation, -predation,
         -predation, predation + th3 * x[1];
    return z;
  };
  m.drift_jacobian = [th1, th2, th3](const VectorXd& x, double) {
    MatrixXd j(2, 2);
    j << th1 - th2 * x[1], -th2 * x[0],
         th2 * x[1], th2 * x[0] - th3;
    return j;
  };
  m.valid = detail::nonnegative;
  m.factorization = DiffusionModel::Factorization{stoich, lambda};
  return m;
}

/// mRNA/protein kinetics with time-inhomogeneous transcription
/// k_R(t) = b0 exp(-b1 (t-b2)^2) + b3 and diagonal diffusion factor.
/// theta = (gamma_R, gamma_P, k_P, b0, b1, b2, b3).
inline DiffusionModel gene_expression(const VectorXd& theta) {
  if (theta.size() != 7) throw std::invalid_argument("gene_expression: theta must have 7 entries");
  detail::require_positive(theta, "gene_expression");
  const double g_r = theta[0], g_p = theta[1], k_p = theta[2];
  const double b0 = theta[3], b1 = theta[4], b2 = theta[5], b3 = theta[6];
  auto k_r = [b0, b1, b2, b3](double t) { return b0 * std::exp(-b1 * (t - b2) * (t - b2)) + b3; };

  DiffusionModel m;
  m.name = "ge";
  m.dim = 2;
  m.noise_dim = 2;
  m.drift = [g_r, g_p, k_p, k_r](const VectorXd& x, double t) {
    VectorXd mu(2);
    mu << k_r(t) - g_r * x[0], k_p * x[0] - g_p * x[1];
    return mu;
  };
  m.sigma = [g_r, g_p, k_p, k_r](const VectorXd& x, double t) {
    MatrixXd s = MatrixXd::Zero(2, 2);
    s(0, 0) = std::sqrt(k_r(t) + g_r * x[0]);
    s(1, 1) = std::sqrt(k_p * x[0] + g_p * x[1]);
    return s;
  };
  m.zeta = [g_r, g_p, k_p, k_r](const VectorXd& x, double t) {
    MatrixXd z = MatrixXd::Zero(2, 2);
    z(0, 0) = k_r(t) + g_r * x[0];
    z(1, 1) = k_p * x[0] + g_p * x[1];
    return z;
  };
  m.drift_jacobian = [g_r, g_p, k_p](const VectorXd&, double) {
    MatrixXd j(2, 2);
    j << -g_r, 0.0,
         k_p, -g_p;
    return j;
  };
  m.valid = detail::nonnegative;
  return m;
}

/// Scalar birth-death: drift (theta1-theta2) x, volatility (theta1+theta2) x.
/// eta, G and phi have closed forms, making this the analytic test fixture.
inline DiffusionModel birth_death(const VectorXd& theta) {
  if (theta.size() != 2) throw std::invalid_argument("birth_death: theta must have 2 entries");
  detail::require_positive(theta, "birth_death");
  const double lam = theta[0] - theta[1];
  const double tot = theta[0] + theta[1];

  DiffusionModel m;
  m.name = "bd";
  m.dim = 1;
  m.noise_dim = 1;
  m.drift = [lam](const VectorXd& x, double) { return VectorXd::Constant(1, lam * x[0]); };
  m.sigma = [tot](const VectorXd& x, double) {
    return MatrixXd::Constant(1, 1, std::sqrt(tot * x[0]));
  };
  m.zeta = [tot](const VectorXd& x, double) { return MatrixXd::Constant(1, 1, tot * x[0]); };
  m.drift_jacobian = [lam](const VectorXd&, double) { return MatrixXd::Constant(1, 1, lam); };
  m.valid = detail::nonnegative;
  return m;
}

/// Birth-death after the variance-stabilizing transform
/// y = 2 sqrt(x / (theta1+theta2)): unit volatility, drift
/// ((theta1-theta2)/2) y - 1/(2y). Initial states map via the same transform.
inline DiffusionModel transformed_birth_death(const VectorXd& theta) {
  if (theta.size() != 2) {
    throw std::invalid_argument("transformed_birth_death: theta must have 2 entries");
  }
  detail::require_positive(theta, "transformed_birth_death");
  const double half_lam = 0.5 * (theta[0] - theta[1]);

  DiffusionModel m;
  m.name = "bd-lamperti";
  m.dim = 1;
  m.noise_dim = 1;
  m.drift = [half_lam](const VectorXd& y, double) {
    return VectorXd::Constant(1, half_lam * y[0] - 0.5 / y[0]);
  };
  m.sigma = [](const VectorXd&, double) { return MatrixXd::Constant(1, 1, 1.0); };
  m.zeta = [](const VectorXd&, double) { return MatrixXd::Constant(1, 1, 1.0); };
  m.drift_jacobian = [half_lam](const VectorXd& y, double) {
    return MatrixXd::Constant(1, 1, half_lam + 0.5 / (y[0] * y[0]));
  };
  m.valid = [](const VectorXd& y) { return y[0] > 0.0; };
  return m;
}

inline double lamperti_state(double x, const VectorXd& theta) {
  return 2.0 * std::sqrt(x / (theta[0] + theta[1]));
}

struct ModelCatalogEntry {
  std::string name;
  std::function<DiffusionModel(const VectorXd&)> make;
  VectorXd default_theta;
  VectorXd default_x0;
  double default_dt = 0.0;
  std::vector<double> default_horizons;   // study T grid
  std::vector<double> dt_study_horizons;  // small / medium / large T
  std::vector<double> dt_study_steps;     // decreasing step sizes
  std::string obs_scheme;                 // quantiles-5-50-95 | pca-90
  bool has_analytic_oracle = false;
};

namespace detail {
inline std::vector<double> spaced(double lo, double hi, int n) {
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = lo + (hi - lo) * i / (n - 1);
  return v;
}
}  // namespace detail

inline const std::vector<ModelCatalogEntry>& model_catalog() {
  static const std::vector<ModelCatalogEntry> catalog = [] {
    std::vector<ModelCatalogEntry> c;

    ModelCatalogEntry lv;
    lv.name = "lv";
    lv.make = lotka_volterra;
    lv.default_theta = (VectorXd(3) << 0.5, 0.0025, 0.3).finished();
    lv.default_x0 = (VectorXd(2) << 71, 79).finished();
    lv.default_dt = 0.1;
    lv.default_horizons = detail::spaced(1.0, 10.0, 10);
    lv.dt_study_horizons = {1.0, 4.0, 7.0};
    lv.dt_study_steps = {0.1, 0.05, 0.01, 0.005, 0.001};
    lv.obs_scheme = "pca-90";
    c.push_back(lv);

    ModelCatalogEntry ge;
    ge.name = "ge";
    ge.make = gene_expression;
    ge.default_theta = (VectorXd(7) << 0.7, 0.72, 3, 80, 0.05, 2, 50).finished();
    ge.default_x0 = (VectorXd(2) << 70, 70).finished();
    ge.default_dt = 0.01;
    ge.default_horizons = detail::spaced(0.4, 4.0, 10);
    ge.dt_study_horizons = {0.4, 2.0, 3.6};
    ge.dt_study_steps = {0.01, 0.005, 0.001, 0.0005, 0.0001};
    ge.obs_scheme = "pca-90";
    c.push_back(ge);

    ModelCatalogEntry bd;
    bd.name = "bd";
    bd.make = birth_death;
    bd.default_theta = (VectorXd(2) << 0.1, 0.8).finished();
    bd.default_x0 = VectorXd::Constant(1, 50.0);
    bd.default_dt = 0.01;
    bd.default_horizons = detail::spaced(0.2, 2.0, 10);
    bd.dt_study_horizons = {0.2, 1.0, 2.0};
    bd.dt_study_steps = {0.01, 0.005, 0.001, 0.0005, 0.0001};
    bd.obs_scheme = "quantiles-5-50-95";
    bd.has_analytic_oracle = true;
    c.push_back(bd);

    ModelCatalogEntry bdl = bd;
    bdl.name = "bd-lamperti";
    bdl.make = transformed_birth_death;
    bdl.default_x0 = VectorXd::Constant(1, lamperti_state(50.0, bd.default_theta));
    bdl.has_analytic_oracle = false;
    c.push_back(bdl);

    return c;
  }();
  return catalog;
}

inline const ModelCatalogEntry* find_model(const std::string& name) {
  for (const auto& entry : model_catalog()) {
    if (entry.name == name) return &entry;
  }
  return nullptr;
}

}  // namespace sdebridge

#endif  // SDEBRIDGE_MODELS_HPP
