#ifndef SDEBRIDGE_LINALG_HPP
#define SDEBRIDGE_LINALG_HPP

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>
#include <string>

#include "sdebridge/core.hpp"

namespace sdebridge {

// Jitter policy for nearly singular covariances: add eps*trace/d*I with eps
// escalating tenfold from 1e-12 to 1e-8, then give up.
inline constexpr double kJitterBase = 1e-12;
inline constexpr double kJitterMax = 1e-8;

inline constexpr double kLogTwoPi = 1.8378770664093454836;

/// Cholesky of a symmetric positive definite matrix, regularizing with the
/// jitter ladder before declaring failure.
inline Eigen::LLT<MatrixXd> spd_cholesky(const MatrixXd& m, const char* context) {
  Eigen::LLT<MatrixXd> llt(m);
  if (llt.info() == Eigen::Success) return llt;
  const double scale = m.trace() / static_cast<double>(m.rows());
  if (scale > 0.0 && std::isfinite(scale)) {
    for (double eps = kJitterBase; eps <= kJitterMax * 1.0001; eps *= 10.0) {
      MatrixXd j = m;
      j.diagonal().array() += eps * scale;
      llt.compute(j);
      if (llt.info() == Eigen::Success) return llt;
    }
  }
  throw NumericFailure(std::string(context) + ": covariance not positive definite within jitter budget");
}

/// A factor F with F F^T = cov for a PSD matrix. Lower-triangular Cholesky
/// when it exists, pivoted LDLT next, and an eigendecomposition square root
/// for the exactly singular case.
inline MatrixXd psd_sqrt(const MatrixXd& cov) {
  const auto d = cov.rows();
  if (cov.isZero(0.0)) return MatrixXd::Zero(d, d);

  Eigen::LLT<MatrixXd> llt(cov);
  if (llt.info() == Eigen::Success) return llt.matrixL();

  const double scale = cov.cwiseAbs().maxCoeff();

  Eigen::LDLT<MatrixXd> ldlt(cov);
  if (ldlt.info() == Eigen::Success && ldlt.vectorD().minCoeff() >= -1e-12 * scale) {
    VectorXd droot = ldlt.vectorD().cwiseMax(0.0).cwiseSqrt();
    MatrixXd f = ldlt.transpositionsP().transpose() * MatrixXd(ldlt.matrixL());
    f *= droot.asDiagonal();
    if (((f * f.transpose()) - cov).cwiseAbs().maxCoeff() <= 1e-10 * (1.0 + scale)) return f;
  }

  Eigen::SelfAdjointEigenSolver<MatrixXd> es(cov);
  if (es.info() == Eigen::Success) {
    const double lmax = es.eigenvalues().cwiseAbs().maxCoeff();
    if (es.eigenvalues().minCoeff() >= -1e-8 * std::max(lmax, 1e-300)) {
      return es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
    }
  }

  // Indefinite beyond tolerance: last resort is the jitter ladder.
  const double tr = cov.trace() / static_cast<double>(d);
  if (tr > 0.0) {
    for (double eps = kJitterBase; eps <= kJitterMax * 1.0001; eps *= 10.0) {
      MatrixXd j = cov;
      j.diagonal().array() += eps * tr;
      Eigen::LLT<MatrixXd> jllt(j);
      if (jllt.info() == Eigen::Success) return jllt.matrixL();
    }
  }
  throw NumericFailure("psd_sqrt: matrix not positive semi-definite within jitter budget");
}

/// Log density of N(mean, cov) at x.
inline double log_gaussian(const VectorXd& x, const VectorXd& mean, const MatrixXd& cov) {
  const auto llt = spd_cholesky(cov, "log_gaussian");
  const MatrixXd& l = llt.matrixLLT();
  double logdet = 0.0;
  for (Eigen::Index i = 0; i < l.rows(); ++i) logdet += std::log(l(i, i));
  logdet *= 2.0;
  const VectorXd u = llt.matrixL().solve(x - mean);
  return -0.5 * (static_cast<double>(x.size()) * kLogTwoPi + logdet + u.squaredNorm());
}

/// mean + F * noise with F F^T = cov; noise holds standard normals.
inline VectorXd gaussian_sample(const VectorXd& mean, const MatrixXd& cov, const VectorXd& noise) {
  return mean + psd_sqrt(cov) * noise;
}

}  // namespace sdebridge

#endif  // SDEBRIDGE_LINALG_HPP
