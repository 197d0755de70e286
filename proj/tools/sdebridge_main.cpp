// Command-line driver for the bridge-proposal simulation studies.
//
// Verbs: list-models, endpoints, study, dt-study, paths. A JSON config file
// mirrors every flag; explicitly passed flags win. Failures exit nonzero
// with a one-line JSON error object on stdout.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sdebridge/study.hpp"

namespace fs = std::filesystem;
using sdebridge::Json;
using sdebridge::StudyConfig;

namespace {

struct CliOptions {
  std::string config_file;
  std::string model;
  std::vector<std::string> proposals;
  std::vector<double> horizons;
  std::vector<double> steps;
  std::vector<double> theta;
  std::vector<double> x0;
  long n_paths = 0;
  long cloud_size = 0;
  int reps = 0;
  double sigma_obs = -1.0;
  std::uint64_t seed = 0;
  std::string out_dir = "out";
  std::string scheme;
  bool paper_scale = false;
  int workers = -1;
  int figure_paths = 0;
  int obs_index = -1;
};

void add_common_flags(CLI::App* cmd, CliOptions& opt) {
  cmd->add_option("--config", opt.config_file, "JSON config file; flags override it");
  cmd->add_option("--model", opt.model, "model name (see list-models)");
  cmd->add_option("--proposal", opt.proposals,
                  "proposal kind, repeatable: fs|mdb|rb-ode|rb-lna|rbbar-ode|rbbar-lna");
  cmd->add_option("--T", opt.horizons, "inter-observation time, repeatable");
  cmd->add_option("--dt", opt.steps, "step size, repeatable");
  cmd->add_option("--theta", opt.theta, "model parameters override");
  cmd->add_option("--x0", opt.x0, "initial state override");
  cmd->add_option("--N", opt.n_paths, "paths per ensemble");
  cmd->add_option("--M", opt.cloud_size, "endpoint cloud size");
  cmd->add_option("--reps", opt.reps, "identical timing repetitions");
  cmd->add_option("--sigma-obs", opt.sigma_obs, "observation noise scale (Sigma = scale*I)");
  cmd->add_option("--seed", opt.seed, "master seed");
  cmd->add_option("--out", opt.out_dir, "output directory");
  cmd->add_option("--scheme", opt.scheme, "observation scheme: quantiles-5-50-95|pca-90");
  cmd->add_flag("--paper-scale", opt.paper_scale, "paper scale: N=1e6, reps=10");
  cmd->add_option("--workers", opt.workers, "worker threads (0 = hardware)");
  cmd->add_option("--paths-n", opt.figure_paths, "paths verb: number of figure paths");
  cmd->add_option("--obs-index", opt.obs_index, "paths verb: index into selected observations");
}

StudyConfig merge_config(const CLI::App* cmd, const CliOptions& opt) {
  StudyConfig cfg;
  if (!opt.config_file.empty()) {
    std::ifstream in(opt.config_file);
    if (!in) throw std::runtime_error("cannot open config file '" + opt.config_file + "'");
    Json j;
    in >> j;
    cfg = sdebridge::study_config_from_json(j);
  }
  auto given = [cmd](const char* flag) { return cmd->count(flag) > 0; };
  if (given("--model")) cfg.model = opt.model;
  if (given("--T")) cfg.horizons = opt.horizons;
  if (given("--dt")) cfg.steps = opt.steps;
  if (given("--proposal")) {
    cfg.proposals.clear();
    for (const auto& name : opt.proposals) {
      const auto kind = sdebridge::parse_proposal(name);
      if (!kind) throw std::invalid_argument("unknown proposal '" + name + "'");
      cfg.proposals.push_back(*kind);
    }
  }
  auto to_vec = [](const std::vector<double>& v) {
    Eigen::VectorXd out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i];
    return out;
  };
  if (given("--theta")) cfg.theta = to_vec(opt.theta);
  if (given("--x0")) cfg.x0 = to_vec(opt.x0);
  if (given("--N")) cfg.n_paths = opt.n_paths;
  if (given("--M")) cfg.cloud_size = opt.cloud_size;
  if (given("--reps")) cfg.reps = opt.reps;
  if (given("--sigma-obs")) cfg.sigma_obs = opt.sigma_obs;
  if (given("--seed")) cfg.seed = opt.seed;
  if (given("--scheme")) cfg.scheme = opt.scheme;
  if (given("--paper-scale")) cfg.paper_scale = opt.paper_scale;
  if (given("--workers")) cfg.workers = opt.workers;
  if (given("--paths-n")) cfg.figure_paths = opt.figure_paths;
  if (given("--obs-index")) cfg.obs_index = opt.obs_index;
  if (cfg.model.empty()) throw std::invalid_argument("--model (or a config file) is required");
  return cfg;
}

std::ofstream open_out(const fs::path& dir, const std::string& name) {
  fs::create_directories(dir);
  std::ofstream out(dir / name, std::ios::binary);  // binary keeps LF endings everywhere
  if (!out) throw std::runtime_error("cannot write " + (dir / name).string());
  return out;
}

void write_meta(const fs::path& dir, const StudyConfig& cfg, const Json& metadata) {
  auto out = open_out(dir, "meta.json");
  Json j{{"config", sdebridge::study_config_to_json(cfg)}, {"metadata", metadata}};
  out << j.dump(2) << '\n';
}

int cmd_list_models() {
  for (const auto& entry : sdebridge::model_catalog()) {
    const auto model = entry.make(entry.default_theta);
    std::cout << entry.name << ": d=" << model.dim << " r=" << model.noise_dim
              << " theta=" << sdebridge::join_components(entry.default_theta)
              << " x0=" << sdebridge::join_components(entry.default_x0)
              << " dt=" << sdebridge::fmt_double(entry.default_dt) << " scheme=" << entry.obs_scheme
              << (entry.has_analytic_oracle ? " [analytic oracle]" : "") << '\n';
  }
  return 0;
}

int cmd_endpoints(const StudyConfig& cfg, const std::string& out_dir) {
  const auto rs = sdebridge::resolve_study(cfg);
  const double horizon = rs.horizons.front();
  const double step = *std::max_element(rs.steps.begin(), rs.steps.end());
  const sdebridge::TimeGrid grid(horizon, step);
  const int d = rs.model.dim;
  const Eigen::MatrixXd projection = Eigen::MatrixXd::Identity(d, d);
  const Eigen::MatrixXd noise = cfg.sigma_obs * Eigen::MatrixXd::Identity(d, d);

  const auto cloud = sdebridge::simulate_endpoints(
      rs.model, rs.x0, grid, projection, noise, cfg.cloud_size,
      sdebridge::RandomSource::derive(cfg.seed, 0x10000), cfg.workers);
  const auto sel = sdebridge::select_observations(cloud.observations, rs.scheme);

  const fs::path dir(out_dir);
  {
    auto out = open_out(dir, "endpoints.csv");
    out << "sample";
    for (int i = 0; i < d; ++i) out << ",y" << (i + 1);
    out << '\n';
    for (long j = 0; j < cloud.observations.cols(); ++j) {
      out << j;
      for (int i = 0; i < d; ++i) out << ',' << sdebridge::fmt_double(cloud.observations(i, j));
      out << '\n';
    }
  }
  {
    auto out = open_out(dir, "observations.csv");
    out << "label";
    for (int i = 0; i < d; ++i) out << ",y" << (i + 1);
    out << '\n';
    for (const auto& p : sel.points) {
      out << p.label;
      for (int i = 0; i < d; ++i) out << ',' << sdebridge::fmt_double(p.value[i]);
      out << '\n';
    }
  }
  write_meta(dir, cfg,
             Json{{"T", horizon},
                  {"dt", step},
                  {"resampled", cloud.resampled},
                  {"warnings", sel.warnings}});
  std::cout << "wrote " << (dir / "endpoints.csv").string() << " (" << cloud.observations.cols()
            << " samples, " << sel.points.size() << " selected observations)\n";
  return 0;
}

int cmd_study(const StudyConfig& cfg, const std::string& out_dir, bool dt_mode) {
  const fs::path dir(out_dir);
  auto out = open_out(dir, dt_mode ? "dt_results.csv" : "results.csv");
  out << sdebridge::kResultCsvHeader << '\n';
  sdebridge::RowSink sink = [&out](const sdebridge::ResultRow& row) {
    sdebridge::write_result_row(out, row);
    out.flush();
  };
  const auto result = dt_mode ? sdebridge::dt_robustness_study(cfg, sink)
                              : sdebridge::run_study(cfg, sink);
  write_meta(dir, cfg, result.metadata);
  long failed = 0;
  for (const auto& row : result.rows) {
    if (row.status.rfind("error", 0) == 0) ++failed;
  }
  std::cout << "wrote " << result.rows.size() << " rows to "
            << (dir / (dt_mode ? "dt_results.csv" : "results.csv")).string();
  if (failed > 0) std::cout << " (" << failed << " cells failed)";
  std::cout << '\n';
  return 0;
}

int cmd_paths(const StudyConfig& cfg, const std::string& out_dir) {
  const auto rs = sdebridge::resolve_study(cfg);
  if (rs.proposals.size() != 1) {
    throw std::invalid_argument("paths: pass exactly one --proposal");
  }
  const sdebridge::ProposalKind kind = rs.proposals.front();
  const double horizon = rs.horizons.front();
  const double step = rs.steps.front();
  const sdebridge::TimeGrid grid(horizon, step);
  const int d = rs.model.dim;
  const Eigen::MatrixXd projection = Eigen::MatrixXd::Identity(d, d);
  const Eigen::MatrixXd noise = cfg.sigma_obs * Eigen::MatrixXd::Identity(d, d);

  const auto cloud = sdebridge::simulate_endpoints(
      rs.model, rs.x0, grid, projection, noise, cfg.cloud_size,
      sdebridge::RandomSource::derive(cfg.seed, 0x10000), cfg.workers);
  const auto sel = sdebridge::select_observations(cloud.observations, rs.scheme);
  const int idx = cfg.obs_index >= 0 ? cfg.obs_index : 0;
  if (idx >= static_cast<int>(sel.points.size())) {
    throw std::invalid_argument("paths: --obs-index out of range");
  }
  const sdebridge::ObservationModel obs{projection, noise, sel.points[idx].value};

  sdebridge::DeterministicPath xi;
  sdebridge::SigmaSuffixStats stats;
  const bool use_xi = sdebridge::proposal_uses_xi(kind);
  if (use_xi) {
    xi = sdebridge::build_xi(sdebridge::xi_kind_for(kind), rs.model, grid, rs.x0, &obs);
    if (sdebridge::proposal_uses_suffix_stats(kind)) {
      stats = sdebridge::sigma_suffix_stats(xi, rs.model, grid);
    }
  }

  const fs::path dir(out_dir);
  auto out = open_out(dir, "paths.csv");
  sdebridge::emit_paths(rs.model, rs.x0, kind, grid, obs, use_xi ? &xi : nullptr,
                        sdebridge::proposal_uses_suffix_stats(kind) ? &stats : nullptr,
                        cfg.figure_paths, sdebridge::RandomSource::derive(cfg.seed, 0x40000), out);
  write_meta(dir, cfg,
             Json{{"T", horizon},
                  {"dt", step},
                  {"proposal", sdebridge::proposal_name(kind)},
                  {"observation", sel.points[idx].label},
                  {"n_paths", cfg.figure_paths}});
  std::cout << "wrote " << (dir / "paths.csv").string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bridge proposals for diffusions conditioned on a noisy terminal observation"};
  app.require_subcommand(1);

  CliOptions opt;
  CLI::App* list_cmd = app.add_subcommand("list-models", "list the model catalog");
  CLI::App* endpoints_cmd =
      app.add_subcommand("endpoints", "simulate an endpoint cloud and select observations");
  CLI::App* study_cmd = app.add_subcommand("study", "run the full (T, y, proposal) study grid");
  CLI::App* dt_cmd =
      app.add_subcommand("dt-study", "step-size robustness sweep of the rbbar proposals");
  CLI::App* paths_cmd = app.add_subcommand("paths", "emit weighted figure paths for one cell");
  for (CLI::App* cmd : {endpoints_cmd, study_cmd, dt_cmd, paths_cmd}) {
    add_common_flags(cmd, opt);
  }

  try {
    app.parse(argc, argv);
    if (list_cmd->parsed()) return cmd_list_models();
    CLI::App* active = endpoints_cmd->parsed() ? endpoints_cmd
                       : study_cmd->parsed()   ? study_cmd
                       : dt_cmd->parsed()      ? dt_cmd
                                               : paths_cmd;
    StudyConfig cfg = merge_config(active, opt);
    if (cfg.figure_paths < 1) cfg.figure_paths = 50;
    if (endpoints_cmd->parsed()) return cmd_endpoints(cfg, opt.out_dir);
    if (study_cmd->parsed()) return cmd_study(cfg, opt.out_dir, false);
    if (dt_cmd->parsed()) return cmd_study(cfg, opt.out_dir, true);
    return cmd_paths(cfg, opt.out_dir);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    std::cout << Json{{"error", "usage"}, {"message", e.what()}}.dump() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cout << Json{{"error", "failure"}, {"message", e.what()}}.dump() << '\n';
    return 1;
  }
}
