#ifndef SDEBRIDGE_STUDY_HPP
#define SDEBRIDGE_STUDY_HPP

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "sdebridge/core.hpp"
#include "sdebridge/importance.hpp"
#include "sdebridge/models.hpp"
#include "sdebridge/proposals.hpp"

namespace sdebridge {

using Json = nlohmann::json;

/// Shortest round-trip decimal form; locale-independent.
inline std::string fmt_double(double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

/// Empirical quantile with linear interpolation between order statistics
/// (the type-7 convention). Input must be sorted ascending.
inline double quantile_type7(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) throw std::invalid_argument("quantile_type7: empty sample");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= sorted.size()) return sorted.back();
  return sorted[lo] + (h - lo) * (sorted[lo + 1] - sorted[lo]);
}

struct EndpointCloud {
  MatrixXd observations;  // r_obs x M
  MatrixXd states;        // d x M terminal states
  long resampled = 0;     // paths redrawn after leaving the domain
};

/// Forward-simulates M terminal observations through (P, Sigma). Paths that
/// leave the domain are redrawn on fresh substreams, within a global budget
/// of 10*M attempts.
inline EndpointCloud simulate_endpoints(const DiffusionModel& model, const VectorXd& x0,
                                        const TimeGrid& grid, const MatrixXd& projection,
                                        const MatrixXd& noise_cov, long m_samples,
                                        std::uint64_t seed, int n_workers = 0) {
  if (m_samples < 2) throw std::invalid_argument("simulate_endpoints: need at least two samples");
  model.require_valid(x0, 0.0);
  if (n_workers <= 0) {
    n_workers = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  }
  n_workers = static_cast<int>(std::min<long>(n_workers, m_samples));

  const int d = model.dim;
  const int r = model.noise_dim;
  const int r_obs = static_cast<int>(projection.rows());
  const MatrixXd noise_factor = psd_sqrt(noise_cov);
  constexpr int kPerSlotCap = 64;

  EndpointCloud cloud;
  cloud.observations.resize(r_obs, m_samples);
  cloud.states.resize(d, m_samples);
  std::atomic<long> attempts_total{0};
  std::atomic<long> failures{0};

  auto worker = [&](long begin, long end) {
    for (long i = begin; i < end; ++i) {
      bool done = false;
      for (int attempt = 0; attempt < kPerSlotCap && !done; ++attempt) {
        attempts_total.fetch_add(1, std::memory_order_relaxed);
        RandomSource rs(seed, static_cast<std::uint64_t>(i) +
                                  static_cast<std::uint64_t>(attempt) *
                                      static_cast<std::uint64_t>(m_samples));
        VectorXd x = x0;
        bool ok = true;
        for (int k = 0; k < grid.n_steps(); ++k) {
          x = em_forward_step(model, x, grid.time_at(k), grid.step(), rs.gaussians(r));
          if (!model.is_valid_state(x)) {
            ok = false;
            break;
          }
        }
        if (ok) {
          cloud.states.col(i) = x;
          cloud.observations.col(i) = projection * x + noise_factor * rs.gaussians(r_obs);
          done = true;
        }
      }
      if (!done) failures.fetch_add(1, std::memory_order_relaxed);
    }
  };

  if (n_workers == 1) {
    worker(0, m_samples);
  } else {
    std::vector<std::thread> pool;
    const long chunk = (m_samples + n_workers - 1) / n_workers;
    for (int w = 0; w < n_workers; ++w) {
      const long begin = w * chunk;
      const long end = std::min<long>(begin + chunk, m_samples);
      if (begin >= end) break;
      pool.emplace_back(worker, begin, end);
    }
    for (auto& th : pool) th.join();
  }

  cloud.resampled = attempts_total.load() - m_samples;
  if (failures.load() > 0 || attempts_total.load() > 10 * m_samples) {
    throw std::runtime_error("simulate_endpoints: resample budget exceeded (10*M attempts)");
  }
  return cloud;
}

struct LabeledObservation {
  std::string label;
  VectorXd value;
};

struct ObservationSelection {
  std::vector<LabeledObservation> points;
  std::vector<std::string> warnings;
};

/// The label select_observations assigns to the central point of a scheme.
inline const char* centre_label(const std::string& scheme) {
  return scheme == "quantiles-5-50-95" ? "q50" : "mean";
}

/// Picks the study observations from an endpoint cloud.
///   quantiles-5-50-95: the scalar 5%/50%/95% empirical quantiles.
///   pca-90: the sample mean, plus per principal axis the points whose
///           signed projection sits at the 90% and 10% quantiles.
inline ObservationSelection select_observations(const MatrixXd& cloud, const std::string& scheme) {
  const long m = cloud.cols();
  const int dim = static_cast<int>(cloud.rows());
  if (m < 2) throw std::invalid_argument("select_observations: need at least two points");

  ObservationSelection sel;
  if (scheme == "quantiles-5-50-95") {
    if (dim != 1) {
      throw std::invalid_argument("select_observations: quantile scheme needs scalar observations");
    }
    std::vector<double> v(cloud.data(), cloud.data() + m);
    std::sort(v.begin(), v.end());
    sel.points.push_back({"q05", VectorXd::Constant(1, quantile_type7(v, 0.05))});
    sel.points.push_back({"q50", VectorXd::Constant(1, quantile_type7(v, 0.50))});
    sel.points.push_back({"q95", VectorXd::Constant(1, quantile_type7(v, 0.95))});
    return sel;
  }
  if (scheme != "pca-90") {
    throw std::invalid_argument("select_observations: unknown scheme '" + scheme + "'");
  }

  const VectorXd mean = cloud.rowwise().mean();
  MatrixXd centered = cloud.colwise() - mean;
  const MatrixXd cov = centered * centered.transpose() / static_cast<double>(m - 1);
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(cov);
  const double lmax = es.eigenvalues().cwiseAbs().maxCoeff();

  sel.points.push_back({"mean", mean});
  // eigenvalues ascend; walk principal axes from largest
  for (int axis = 0; axis < dim; ++axis) {
    const int idx = dim - 1 - axis;
    const double lambda = es.eigenvalues()[idx];
    if (!(lambda > 0.0) || lambda <= 1e-12 * std::max(lmax, 1e-300)) {
      sel.warnings.push_back("pc" + std::to_string(axis + 1) + ": degenerate axis skipped");
      continue;
    }
    const VectorXd v = es.eigenvectors().col(idx);
    std::vector<double> proj(m);
    for (long j = 0; j < m; ++j) proj[j] = v.dot(centered.col(j));
    std::sort(proj.begin(), proj.end());
    const double q_hi = quantile_type7(proj, 0.90);
    const double q_lo = quantile_type7(proj, 0.10);
    const std::string tag = "pc" + std::to_string(axis + 1);
    sel.points.push_back({tag + "-q90", mean + q_hi * v});
    sel.points.push_back({tag + "-q10", mean + q_lo * v});
  }
  return sel;
}

struct StudyConfig {
  std::string model;
  std::optional<VectorXd> theta;
  std::optional<VectorXd> x0;
  std::vector<double> horizons;             // empty: catalog default
  std::vector<double> steps;                // empty: {catalog default}
  std::vector<ProposalKind> proposals;      // empty: the five bridge constructs
  long n_paths = 100000;                    // desk scale
  long cloud_size = 10000;
  int reps = 3;
  double sigma_obs = 1e-12;
  std::uint64_t seed = 1;
  std::string scheme;                       // empty: catalog default
  bool paper_scale = false;
  int workers = 0;
  int figure_paths = 50;                    // paths verb
  int obs_index = 0;                        // paths verb: which selected observation
};

struct ResolvedStudy {
  const ModelCatalogEntry* entry = nullptr;
  DiffusionModel model;
  VectorXd theta;
  VectorXd x0;
  std::vector<double> horizons;
  std::vector<double> steps;
  std::vector<ProposalKind> proposals;
  std::string scheme;
  long n_paths = 0;
  int reps = 0;
};

/// Applies catalog defaults and the paper-scale switch, and verifies that
/// every step divides every horizon (rejecting the config otherwise).
inline ResolvedStudy resolve_study(const StudyConfig& cfg) {
  const ModelCatalogEntry* entry = find_model(cfg.model);
  if (!entry) throw std::invalid_argument("unknown model '" + cfg.model + "'");

  ResolvedStudy rs;
  rs.entry = entry;
  rs.theta = cfg.theta.value_or(entry->default_theta);
  rs.x0 = cfg.x0.value_or(entry->default_x0);
  rs.model = entry->make(rs.theta);
  if (cfg.x0 && cfg.x0->size() != rs.model.dim) {
    throw std::invalid_argument("x0 has wrong dimension for model '" + cfg.model + "'");
  }
  rs.horizons = cfg.horizons.empty() ? entry->default_horizons : cfg.horizons;
  rs.steps = cfg.steps.empty() ? std::vector<double>{entry->default_dt} : cfg.steps;
  rs.proposals = cfg.proposals;
  if (rs.proposals.empty()) {
    rs.proposals = {ProposalKind::Mdb, ProposalKind::RbOde, ProposalKind::RbLna,
                    ProposalKind::RbBarOde, ProposalKind::RbBarLna};
  }
  rs.scheme = cfg.scheme.empty() ? entry->obs_scheme : cfg.scheme;
  rs.n_paths = cfg.paper_scale ? 1000000 : cfg.n_paths;
  rs.reps = cfg.paper_scale ? 10 : cfg.reps;
  if (rs.n_paths < 1 || cfg.cloud_size < 1 || rs.reps < 1) {
    throw std::invalid_argument("N, M and reps must all be at least 1");
  }
  if (rs.horizons.empty() || rs.steps.empty() || rs.proposals.empty()) {
    throw std::invalid_argument("horizon, step and proposal lists must be non-empty");
  }
  for (double horizon : rs.horizons) {
    for (double step : rs.steps) {
      TimeGrid probe(horizon, step);  // throws unless K = T/dt is an integer
      (void)probe;
    }
  }
  return rs;
}

struct ResultRow {
  std::string model;
  std::string proposal;
  double horizon = 0.0;
  double step = 0.0;
  std::string obs_label;
  VectorXd obs_value;
  double rel_ess = 0.0;
  double ess_per_sec = 0.0;
  double wall_seconds = 0.0;
  double setup_seconds = 0.0;
  double sampling_seconds = 0.0;
  long domain_rejections = 0;
  long numeric_rejections = 0;
  std::uint64_t seed = 0;
  std::string status = "ok";
};

// Wall-derived columns (everything an identical rerun may legitimately
// change): ess_per_sec, wall_s, setup_s, sampling_s.
inline const char* kResultCsvHeader =
    "model,proposal,T,dt,obs_label,obs_value,rel_ess,ess_per_sec,wall_s,setup_s,sampling_s,"
    "domain_rejections,numeric_rejections,seed,status";

inline std::string join_components(const VectorXd& v) {
  std::string out;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) out += ';';
    out += fmt_double(v[i]);
  }
  return out;
}

inline void write_result_row(std::ostream& os, const ResultRow& r) {
  os << r.model << ',' << r.proposal << ',' << fmt_double(r.horizon) << ',' << fmt_double(r.step)
     << ',' << r.obs_label << ',' << join_components(r.obs_value) << ',' << fmt_double(r.rel_ess)
     << ',' << fmt_double(r.ess_per_sec) << ',' << fmt_double(r.wall_seconds) << ','
     << fmt_double(r.setup_seconds) << ',' << fmt_double(r.sampling_seconds) << ','
     << r.domain_rejections << ',' << r.numeric_rejections << ',' << r.seed << ',' << r.status
     << '\n';
}

using RowSink = std::function<void(const ResultRow&)>;

struct StudyResult {
  std::vector<ResultRow> rows;
  Json metadata;
};

namespace detail {

struct CellSpec {
  double horizon;
  double step;
  LabeledObservation obs;
};

/// Runs one (T, y, dt, proposal) cell: R identical full runs (deterministic
/// path construction plus the ensemble), averaging the wall time.
inline ResultRow run_cell(const ResolvedStudy& rs, const CellSpec& cell, ProposalKind kind,
                          long n_paths, int reps, double sigma_obs, std::uint64_t cell_seed,
                          int workers) {
  ResultRow row;
  row.model = rs.entry->name;
  row.proposal = proposal_name(kind);
  row.horizon = cell.horizon;
  row.step = cell.step;
  row.obs_label = cell.obs.label;
  row.obs_value = cell.obs.value;
  row.seed = cell_seed;

  try {
    const TimeGrid grid(cell.horizon, cell.step);
    const int d = rs.model.dim;
    ObservationModel obs{MatrixXd::Identity(d, d), sigma_obs * MatrixXd::Identity(d, d),
                         cell.obs.value};

    double setup_acc = 0.0, sampling_acc = 0.0;
    WeightedEnsemble ens;
    for (int rep = 0; rep < reps; ++rep) {
      const auto t0 = std::chrono::steady_clock::now();
      DeterministicPath xi;
      SigmaSuffixStats stats;
      const bool use_xi = proposal_uses_xi(kind);
      if (use_xi) {
        xi = build_xi(xi_kind_for(kind), rs.model, grid, rs.x0, &obs);
        if (proposal_uses_suffix_stats(kind)) stats = sigma_suffix_stats(xi, rs.model, grid);
      }
      const auto t1 = std::chrono::steady_clock::now();
      ens = run_ensemble(kind, rs.model, rs.x0, grid, obs, use_xi ? &xi : nullptr,
                         proposal_uses_suffix_stats(kind) ? &stats : nullptr, n_paths, cell_seed,
                         workers);
      setup_acc += std::chrono::duration<double>(t1 - t0).count();
      sampling_acc += ens.wall_seconds;
    }

    row.setup_seconds = setup_acc / reps;
    row.sampling_seconds = sampling_acc / reps;
    row.wall_seconds = row.setup_seconds + row.sampling_seconds;
    row.rel_ess = relative_ess(ens.weights);
    row.ess_per_sec = ess_per_second(ens.weights, row.wall_seconds);
    row.domain_rejections = ens.domain_rejections;
    row.numeric_rejections = ens.numeric_rejections;
    if (ens.all_rejected) row.status = "warning: all paths rejected";
  } catch (const std::exception& e) {
    row.status = std::string("error: ") + e.what();
  }
  return row;
}

}  // namespace detail

/// Full study protocol: per horizon, simulate the endpoint cloud at the
/// coarsest step, select observations, then run every (observation, step,
/// proposal) cell. Rows stream to the sink as they complete.
inline StudyResult run_study(const StudyConfig& cfg, const RowSink& sink = {}) {
  const ResolvedStudy rs = resolve_study(cfg);
  const int d = rs.model.dim;
  const MatrixXd projection = MatrixXd::Identity(d, d);
  const MatrixXd noise_cov = cfg.sigma_obs * MatrixXd::Identity(d, d);
  const double cloud_step = *std::max_element(rs.steps.begin(), rs.steps.end());

  StudyResult result;
  long cell_index = 0;
  std::vector<std::string> warnings;

  for (std::size_t ti = 0; ti < rs.horizons.size(); ++ti) {
    const double horizon = rs.horizons[ti];
    ObservationSelection sel;
    try {
      const TimeGrid cloud_grid(horizon, cloud_step);
      const std::uint64_t cloud_seed = RandomSource::derive(cfg.seed, 0x10000 + ti);
      const EndpointCloud cloud =
          simulate_endpoints(rs.model, rs.x0, cloud_grid, projection, noise_cov, cfg.cloud_size,
                             cloud_seed, cfg.workers);
      sel = select_observations(cloud.observations, rs.scheme);
    } catch (const std::exception& e) {
      ResultRow row;
      row.model = rs.entry->name;
      row.horizon = horizon;
      row.obs_label = "(cloud)";
      row.obs_value = VectorXd::Zero(0);
      row.status = std::string("error: ") + e.what();
      if (sink) sink(row);
      result.rows.push_back(std::move(row));
      continue;
    }
    for (const auto& w : sel.warnings) {
      warnings.push_back("T=" + fmt_double(horizon) + " " + w);
    }

    for (const auto& obs : sel.points) {
      for (double step : rs.steps) {
        for (ProposalKind kind : rs.proposals) {
          const std::uint64_t cell_seed = RandomSource::derive(cfg.seed, 0x20000 + cell_index);
          ResultRow row = detail::run_cell(rs, {horizon, step, obs}, kind, rs.n_paths, rs.reps,
                                           cfg.sigma_obs, cell_seed, cfg.workers);
          if (sink) sink(row);
          result.rows.push_back(std::move(row));
          ++cell_index;
        }
      }
    }
  }

  result.metadata = Json{{"model", rs.entry->name},
                         {"scheme", rs.scheme},
                         {"quantile_rule", "type-7 (linear interpolation)"},
                         {"pca_points", "mean plus signed-projection 90%/10% quantiles per axis"},
                         {"cloud_step", cloud_step},
                         {"cloud_size", cfg.cloud_size},
                         {"n_paths", rs.n_paths},
                         {"reps", rs.reps},
                         {"sigma_obs", cfg.sigma_obs},
                         {"seed", cfg.seed},
                         {"wall_time_includes_setup", true},
                         {"wall_derived_columns", {"ess_per_sec", "wall_s", "setup_s", "sampling_s"}},
                         {"warnings", warnings}};
  return result;
}

/// Step-size robustness protocol: the study grid restricted to the
/// path-following proposals, swept across >= 2 step sizes in decreasing
/// order, at the centre observation plus one other picked by seed.
inline StudyResult dt_robustness_study(StudyConfig cfg, const RowSink& sink = {}) {
  const ModelCatalogEntry* entry = find_model(cfg.model);
  if (!entry) throw std::invalid_argument("unknown model '" + cfg.model + "'");

  if (cfg.horizons.empty()) cfg.horizons = entry->dt_study_horizons;
  if (cfg.steps.empty()) cfg.steps = entry->dt_study_steps;
  {
    std::vector<double> uniq = cfg.steps;
    std::sort(uniq.begin(), uniq.end());
    uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
    if (uniq.size() < 2) {
      throw std::invalid_argument("dt-study requires at least two distinct step sizes");
    }
  }
  std::sort(cfg.steps.begin(), cfg.steps.end(), std::greater<>());

  std::vector<ProposalKind> kinds;
  for (ProposalKind k : cfg.proposals) {
    if (proposal_uses_suffix_stats(k)) kinds.push_back(k);
  }
  if (kinds.empty()) kinds = {ProposalKind::RbBarOde, ProposalKind::RbBarLna};
  cfg.proposals = kinds;

  const ResolvedStudy rs = resolve_study(cfg);
  const int d = rs.model.dim;
  const MatrixXd projection = MatrixXd::Identity(d, d);
  const MatrixXd noise_cov = cfg.sigma_obs * MatrixXd::Identity(d, d);
  const double cloud_step = *std::max_element(rs.steps.begin(), rs.steps.end());

  StudyResult result;
  long cell_index = 0;

  for (std::size_t ti = 0; ti < rs.horizons.size(); ++ti) {
    const double horizon = rs.horizons[ti];
    const TimeGrid cloud_grid(horizon, cloud_step);
    const std::uint64_t cloud_seed = RandomSource::derive(cfg.seed, 0x10000 + ti);
    const EndpointCloud cloud = simulate_endpoints(rs.model, rs.x0, cloud_grid, projection,
                                                   noise_cov, cfg.cloud_size, cloud_seed,
                                                   cfg.workers);
    ObservationSelection sel = select_observations(cloud.observations, rs.scheme);

    // centre plus one other, fixed across the step sizes
    std::vector<LabeledObservation> chosen;
    std::vector<LabeledObservation> others;
    for (const auto& p : sel.points) {
      if (p.label == centre_label(rs.scheme)) {
        chosen.push_back(p);
      } else {
        others.push_back(p);
      }
    }
    if (!others.empty()) {
      RandomSource pick(RandomSource::derive(cfg.seed, 0x30000 + ti), 0);
      chosen.push_back(others[pick.raw() % others.size()]);
    }

    for (const auto& obs : chosen) {
      for (ProposalKind kind : rs.proposals) {
        for (double step : rs.steps) {
          const std::uint64_t cell_seed = RandomSource::derive(cfg.seed, 0x20000 + cell_index);
          ResultRow row = detail::run_cell(rs, {horizon, step, obs}, kind, rs.n_paths, rs.reps,
                                           cfg.sigma_obs, cell_seed, cfg.workers);
          if (sink) sink(row);
          result.rows.push_back(std::move(row));
          ++cell_index;
        }
      }
    }
  }

  result.metadata = Json{{"model", rs.entry->name},
                         {"scheme", rs.scheme},
                         {"layout", "rows grouped by (T, observation, proposal), step decreasing"},
                         {"cloud_step", cloud_step},
                         {"n_paths", rs.n_paths},
                         {"seed", cfg.seed}};
  return result;
}

/// Figure data: n_paths simulated skeletons with one record per
/// (path, grid point), each path carrying its normalized weight and a
/// max-normalized transparency. Rejected paths get weight 0.
inline void emit_paths(const DiffusionModel& model, const VectorXd& x0, ProposalKind kind,
                       const TimeGrid& grid, const ObservationModel& obs,
                       const DeterministicPath* xi, const SigmaSuffixStats* stats, int n_paths,
                       std::uint64_t seed, std::ostream& os) {
  if (n_paths < 1) throw std::invalid_argument("emit_paths: need at least one path");
  const int d = model.dim;

  std::vector<std::vector<VectorXd>> paths(n_paths);
  std::vector<double> log_w(n_paths, kNegInf);
  for (int j = 0; j < n_paths; ++j) {
    RandomSource rs(seed, static_cast<std::uint64_t>(j));
    BridgeDraw draw = simulate_bridge(kind, model, x0, grid, obs, xi, stats, rs, &paths[j]);
    log_w[j] = draw.log_weight;
  }
  const std::vector<double> w = normalize_log_weights(log_w);
  const double w_max = *std::max_element(w.begin(), w.end());

  os << "path,t";
  for (int i = 0; i < d; ++i) os << ",x" << (i + 1);
  os << ",weight,transparency\n";
  for (int j = 0; j < n_paths; ++j) {
    const double alpha = w_max > 0.0 ? w[j] / w_max : 0.0;
    for (int k = 0; k < grid.n_points(); ++k) {
      os << j << ',' << fmt_double(grid.time_at(k));
      for (int i = 0; i < d; ++i) os << ',' << fmt_double(paths[j][k][i]);
      os << ',' << fmt_double(w[j]) << ',' << fmt_double(alpha) << '\n';
    }
  }
}

/// JSON round trip for the config file; flags override these values.
inline StudyConfig study_config_from_json(const Json& j) {
  StudyConfig cfg;
  if (j.contains("model")) cfg.model = j.at("model").get<std::string>();
  auto read_vector = [&j](const char* key) -> std::optional<VectorXd> {
    if (!j.contains(key)) return std::nullopt;
    const auto arr = j.at(key).get<std::vector<double>>();
    VectorXd v(arr.size());
    for (std::size_t i = 0; i < arr.size(); ++i) v[i] = arr[i];
    return v;
  };
  cfg.theta = read_vector("theta");
  cfg.x0 = read_vector("x0");
  if (j.contains("T")) cfg.horizons = j.at("T").get<std::vector<double>>();
  if (j.contains("dt")) cfg.steps = j.at("dt").get<std::vector<double>>();
  if (j.contains("proposals")) {
    for (const auto& name : j.at("proposals").get<std::vector<std::string>>()) {
      const auto kind = parse_proposal(name);
      if (!kind) throw std::invalid_argument("unknown proposal '" + name + "'");
      cfg.proposals.push_back(*kind);
    }
  }
  if (j.contains("N")) cfg.n_paths = j.at("N").get<long>();
  if (j.contains("M")) cfg.cloud_size = j.at("M").get<long>();
  if (j.contains("reps")) cfg.reps = j.at("reps").get<int>();
  if (j.contains("sigma_obs")) cfg.sigma_obs = j.at("sigma_obs").get<double>();
  if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("scheme")) cfg.scheme = j.at("scheme").get<std::string>();
  if (j.contains("paper_scale")) cfg.paper_scale = j.at("paper_scale").get<bool>();
  if (j.contains("workers")) cfg.workers = j.at("workers").get<int>();
  if (j.contains("n_figure_paths")) cfg.figure_paths = j.at("n_figure_paths").get<int>();
  if (j.contains("obs_index")) cfg.obs_index = j.at("obs_index").get<int>();
  return cfg;
}

inline Json study_config_to_json(const StudyConfig& cfg) {
  Json j;
  j["model"] = cfg.model;
  if (cfg.theta) j["theta"] = std::vector<double>(cfg.theta->data(), cfg.theta->data() + cfg.theta->size());
  if (cfg.x0) j["x0"] = std::vector<double>(cfg.x0->data(), cfg.x0->data() + cfg.x0->size());
  if (!cfg.horizons.empty()) j["T"] = cfg.horizons;
  if (!cfg.steps.empty()) j["dt"] = cfg.steps;
  if (!cfg.proposals.empty()) {
    std::vector<std::string> names;
    for (ProposalKind k : cfg.proposals) names.emplace_back(proposal_name(k));
    j["proposals"] = names;
  }
  j["N"] = cfg.n_paths;
  j["M"] = cfg.cloud_size;
  j["reps"] = cfg.reps;
  j["sigma_obs"] = cfg.sigma_obs;
  j["seed"] = cfg.seed;
  if (!cfg.scheme.empty()) j["scheme"] = cfg.scheme;
  j["paper_scale"] = cfg.paper_scale;
  j["workers"] = cfg.workers;
  j["n_figure_paths"] = cfg.figure_paths;
  j["obs_index"] = cfg.obs_index;
  return j;
}

}  // namespace sdebridge

#endif  // SDEBRIDGE_STUDY_HPP
