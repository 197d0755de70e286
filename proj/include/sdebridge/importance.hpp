#ifndef SDEBRIDGE_IMPORTANCE_HPP
#define SDEBRIDGE_IMPORTANCE_HPP

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <thread>
#include <vector>

#include "sdebridge/core.hpp"
#include "sdebridge/euler.hpp"
#include "sdebridge/linalg.hpp"
#include "sdebridge/proposals.hpp"

namespace sdebridge {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

enum class PathStatus { Ok, DomainRejected, NumericRejected };

/// Ensemble of N weighted skeleton draws. Rejected paths keep their slot
/// with normalized weight exactly zero, so N stays the ESS denominator.
struct WeightedEnsemble {
  long n_paths = 0;
  std::vector<double> log_weights;   // -inf marks a rejected path
  std::vector<double> weights;       // normalized, sums to 1 over survivors
  std::vector<PathStatus> statuses;
  MatrixXd endpoints;                // d x N, last simulated state per path
  long domain_rejections = 0;
  long numeric_rejections = 0;
  double wall_seconds = 0.0;
  std::uint64_t seed = 0;
  bool all_rejected = false;
};

/// Log of the discretized target: sum of one-step transition densities plus
/// the observation density; -inf when any state leaves the domain.
inline double log_target(const SkeletonPath& path, const DiffusionModel& model,
                         const ObservationModel& obs) {
  const TimeGrid& grid = path.grid;
  double acc = 0.0;
  for (int k = 0; k < grid.n_steps(); ++k) {
    if (!model.is_valid_state(path.states[k]) || !model.is_valid_state(path.states[k + 1])) {
      return kNegInf;
    }
    acc += em_log_density(model, path.states[k + 1], path.states[k], grid.time_at(k), grid.step());
  }
  acc += log_gaussian(obs.value, obs.projection * path.states.back(), obs.noise_cov);
  return acc;
}

struct BridgeDraw {
  double log_weight = kNegInf;
  PathStatus status = PathStatus::Ok;
  VectorXd endpoint;
};

/// Simulates one skeleton from the chosen proposal and returns its
/// log importance weight (target minus proposal). Deterministic given the
/// stream. A full path record is written when out_path is non-null.
inline BridgeDraw simulate_bridge(ProposalKind kind, const DiffusionModel& model,
                                  const VectorXd& x0, const TimeGrid& grid,
                                  const ObservationModel& obs, const DeterministicPath* xi,
                                  const SigmaSuffixStats* stats, RandomSource& stream,
                                  std::vector<VectorXd>* out_path = nullptr) {
  const int d = model.dim;
  BridgeDraw draw;
  if (out_path) {
    out_path->assign(grid.n_points(), x0);
  }

  VectorXd x = x0;
  double log_q = 0.0;
  double log_pi = 0.0;
  int reached = 0;
  for (int k = 0; k < grid.n_steps(); ++k) {
    VectorXd z = stream.gaussians(d);
    try {
      const StepConditional sc = step_conditional(kind, model, x, k, grid, obs, xi, stats);
      const VectorXd x_next = gaussian_sample(sc.mean, sc.cov, z);
      if (!x_next.allFinite()) throw NumericFailure("non-finite state");
      log_q += log_gaussian(x_next, sc.mean, sc.cov);
      log_pi += em_log_density(model, x_next, x, grid.time_at(k), grid.step());
      x = x_next;
    } catch (const NumericFailure&) {
      draw.status = PathStatus::NumericRejected;
    } catch (const DomainViolation&) {
      draw.status = PathStatus::DomainRejected;
    }
    if (draw.status != PathStatus::Ok) break;
    reached = k + 1;
    if (out_path) (*out_path)[reached] = x;
    if (!model.is_valid_state(x)) {
      draw.status = PathStatus::DomainRejected;
      break;
    }
  }

  draw.endpoint = x;
  if (draw.status == PathStatus::Ok) {
    log_pi += log_gaussian(obs.value, obs.projection * x, obs.noise_cov);
    draw.log_weight = log_pi - log_q;
    if (!std::isfinite(draw.log_weight)) draw.status = PathStatus::NumericRejected;
  }
  if (draw.status != PathStatus::Ok) {
    draw.log_weight = kNegInf;
    if (out_path) {
      // a rejected record holds its last reached state over the tail
      for (int k = reached + 1; k < grid.n_points(); ++k) (*out_path)[k] = x;
    }
  }
  return draw;
}

/// Max-subtraction normalization in log space. Returns all-zero weights and
/// sets all_rejected when no finite log weight remains.
inline std::vector<double> normalize_log_weights(const std::vector<double>& log_w,
                                                 bool* all_rejected = nullptr) {
  std::vector<double> w(log_w.size(), 0.0);
  double max_lw = kNegInf;
  for (double lw : log_w) max_lw = std::max(max_lw, lw);
  if (!std::isfinite(max_lw)) {
    if (all_rejected) *all_rejected = true;
    return w;
  }
  double total = 0.0;
  for (std::size_t i = 0; i < log_w.size(); ++i) {
    w[i] = std::isfinite(log_w[i]) ? std::exp(log_w[i] - max_lw) : 0.0;
    total += w[i];
  }
  for (double& wi : w) wi /= total;
  if (all_rejected) *all_rejected = false;
  return w;
}

/// N^{-1} (sum w^2)^{-1}; 0 for an all-rejected ensemble.
inline double relative_ess(const std::vector<double>& weights) {
  double sumsq = 0.0;
  for (double w : weights) sumsq += w * w;
  if (sumsq <= 0.0) return 0.0;
  return 1.0 / (static_cast<double>(weights.size()) * sumsq);
}

/// (sum w^2)^{-1} divided by the wall time in seconds.
inline double ess_per_second(const std::vector<double>& weights, double wall_seconds) {
  if (!(wall_seconds > 0.0)) throw std::invalid_argument("ess_per_second: wall time must be positive");
  double sumsq = 0.0;
  for (double w : weights) sumsq += w * w;
  if (sumsq <= 0.0) return 0.0;
  return 1.0 / (sumsq * wall_seconds);
}

/// Simulates N independent bridge draws on per-path substreams. The result
/// is identical for any worker count: path j always uses stream j and owns
/// slot j, and the reduction runs in index order afterwards.
inline WeightedEnsemble run_ensemble(ProposalKind kind, const DiffusionModel& model,
                                     const VectorXd& x0, const TimeGrid& grid,
                                     const ObservationModel& obs, const DeterministicPath* xi,
                                     const SigmaSuffixStats* stats, long n_paths,
                                     std::uint64_t seed, int n_workers = 0) {
  if (n_paths < 1) throw std::invalid_argument("run_ensemble: need at least one path");
  if (n_workers <= 0) {
    n_workers = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  }
  n_workers = static_cast<int>(std::min<long>(n_workers, n_paths));

  WeightedEnsemble ens;
  ens.n_paths = n_paths;
  ens.seed = seed;
  ens.log_weights.assign(n_paths, kNegInf);
  ens.statuses.assign(n_paths, PathStatus::Ok);
  ens.endpoints.resize(model.dim, n_paths);

  const auto t_start = std::chrono::steady_clock::now();
  auto worker = [&](long begin, long end) {
    for (long j = begin; j < end; ++j) {
      RandomSource rs(seed, static_cast<std::uint64_t>(j));
      BridgeDraw draw = simulate_bridge(kind, model, x0, grid, obs, xi, stats, rs);
      ens.log_weights[j] = draw.log_weight;
      ens.statuses[j] = draw.status;
      ens.endpoints.col(j) = draw.endpoint;
    }
  };

  if (n_workers == 1) {
    worker(0, n_paths);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_workers);
    const long chunk = (n_paths + n_workers - 1) / n_workers;
    for (int w = 0; w < n_workers; ++w) {
      const long begin = w * chunk;
      const long end = std::min<long>(begin + chunk, n_paths);
      if (begin >= end) break;
      pool.emplace_back(worker, begin, end);
    }
    for (auto& th : pool) th.join();
  }
  ens.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();

  for (long j = 0; j < n_paths; ++j) {
    if (ens.statuses[j] == PathStatus::DomainRejected) ++ens.domain_rejections;
    if (ens.statuses[j] == PathStatus::NumericRejected) ++ens.numeric_rejections;
  }
  ens.weights = normalize_log_weights(ens.log_weights, &ens.all_rejected);
  return ens;
}

}  // namespace sdebridge

#endif  // SDEBRIDGE_IMPORTANCE_HPP
