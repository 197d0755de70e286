#ifndef SDEBRIDGE_CORE_HPP
#define SDEBRIDGE_CORE_HPP

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace sdebridge {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// A state outside the diffusion's domain (e.g. a negative population).
class DomainViolation : public std::runtime_error {
 public:
  explicit DomainViolation(const std::string& what) : std::runtime_error(what) {}
};

/// A numerical breakdown: singular covariance beyond the jitter budget,
/// integrator step underflow, and the like. Distinct from DomainViolation.
class NumericFailure : public std::runtime_error {
 public:
  explicit NumericFailure(const std::string& what) : std::runtime_error(what) {}
};

/// Equispaced partition t_k = k*dt of [0, T] with K = T/dt steps.
class TimeGrid {
 public:
  TimeGrid(double horizon, double step) : horizon_(horizon), step_(step) {
    if (!(step > 0.0) || !(horizon > 0.0)) {
      throw std::invalid_argument("TimeGrid: horizon and step must be positive");
    }
    const double ratio = horizon / step;
    n_steps_ = static_cast<int>(std::llround(ratio));
    if (n_steps_ < 1 || std::abs(n_steps_ * step - horizon) > 1e-9 * std::max(horizon, 1.0)) {
      throw std::invalid_argument("TimeGrid: step does not divide horizon");
    }
  }

  double horizon() const { return horizon_; }
  double step() const { return step_; }
  int n_steps() const { return n_steps_; }
  int n_points() const { return n_steps_ + 1; }

  double time_at(int k) const { return step_ * k; }
  /// T - t_k, computed as (K-k)*dt so that partial sums over the remaining
  /// steps reproduce it exactly.
  double remaining(int k) const { return step_ * (n_steps_ - k); }

 private:
  double horizon_;
  double step_;
  int n_steps_;
};

/// Linear-Gaussian observation of the terminal state: y ~ N(P x_K, Sigma).
struct ObservationModel {
  MatrixXd projection;  // P, r_obs x d
  MatrixXd noise_cov;   // Sigma, r_obs x r_obs symmetric PSD
  VectorXd value;       // y

  int obs_dim() const { return static_cast<int>(projection.rows()); }
};

/// Drift, diffusion factor and volatility of dX = mu dt + sigma dB, with the
/// model's parameters captured inside the callables. The optional
/// factorization sigma = S * diag(lambda) covers chemical-Langevin models.
struct DiffusionModel {
  struct Factorization {
    MatrixXd stoichiometry;                                       // S, d x r
    std::function<VectorXd(const VectorXd&, double)> lambda_diag; // diag of Lambda, r
  };

  std::string name;
  int dim = 0;       // d
  int noise_dim = 0; // r
  std::function<VectorXd(const VectorXd&, double)> drift;            // d
  std::function<MatrixXd(const VectorXd&, double)> sigma;            // d x r
  std::function<MatrixXd(const VectorXd&, double)> zeta;             // d x d, sigma*sigma^T
  std::function<MatrixXd(const VectorXd&, double)> drift_jacobian;   // optional analytic d mu / d x
  std::function<bool(const VectorXd&)> valid;                        // domain predicate
  std::optional<Factorization> factorization;

  bool is_valid_state(const VectorXd& x) const {
    if (!x.allFinite()) return false;
    return valid ? valid(x) : true;
  }

  void require_valid(const VectorXd& x, double t) const {
    if (!is_valid_state(x)) {
      throw DomainViolation(name + ": state outside model domain at t=" + std::to_string(t));
    }
  }
};

/// Diffusion skeleton x_0..x_K on a TimeGrid.
struct SkeletonPath {
  TimeGrid grid;
  std::vector<VectorXd> states;  // K+1 entries

  SkeletonPath(TimeGrid g, std::vector<VectorXd> s) : grid(g), states(std::move(s)) {}
};

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}
}  // namespace detail

/// Seeded Gaussian stream. Distinct (seed, stream) pairs give independent
/// sequences; the same pair always replays the same draws, so per-path
/// substreams make ensembles reproducible independent of scheduling.
class RandomSource {
 public:
  RandomSource(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t state = seed ^ (0x9E3779B97F4A7C15ULL + (stream << 1) + (stream >> 3));
    const std::uint32_t w[6] = {
        static_cast<std::uint32_t>(detail::splitmix64(state)),
        static_cast<std::uint32_t>(detail::splitmix64(state) >> 32),
        static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
        static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
    std::seed_seq sseq(w, w + 6);
    engine_.seed(sseq);
  }

  double gaussian() { return normal_(engine_); }

  VectorXd gaussians(int n) {
    VectorXd z(n);
    for (int i = 0; i < n; ++i) z[i] = normal_(engine_);
    return z;
  }

  std::uint64_t raw() { return engine_(); }

  /// Derives a decorrelated child seed, used to namespace cell/cloud seeds.
  static std::uint64_t derive(std::uint64_t seed, std::uint64_t salt) {
    std::uint64_t state = seed + 0x632BE59BD9B4E019ULL * (salt + 1);
    std::uint64_t a = detail::splitmix64(state);
    return detail::splitmix64(state) ^ a;
  }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
};

}  // namespace sdebridge

#endif  // SDEBRIDGE_CORE_HPP
