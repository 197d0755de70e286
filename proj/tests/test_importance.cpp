#include <catch2/catch_amalgamated.hpp>

#include "support.hpp"

#include "sdebridge/importance.hpp"
#include "sdebridge/models.hpp"

using namespace sdebridge;
using Catch::Approx;

namespace {
const VectorXd kBdTheta = (VectorXd(2) << 0.1, 0.8).finished();
const VectorXd kLvTheta = (VectorXd(3) << 0.5, 0.0025, 0.3).finished();
}  // namespace

TEST_CASE("log target on a single-step skeleton matches a hand computation") {
  const auto model = birth_death(kBdTheta);
  const TimeGrid grid(0.01, 0.01);
  SkeletonPath path(grid, {VectorXd::Constant(1, 50.0), VectorXd::Constant(1, 49.2)});
  ObservationModel obs{MatrixXd::Identity(1, 1), MatrixXd::Constant(1, 1, 0.25),
                       VectorXd::Constant(1, 49.0)};

  auto scalar_log_pdf = [](double x, double mean, double var) {
    return -0.5 * std::log(2.0 * M_PI * var) - 0.5 * (x - mean) * (x - mean) / var;
  };
  const double em_term = scalar_log_pdf(49.2, 49.65, 0.45);
  const double obs_term = scalar_log_pdf(49.0, 49.2, 0.25);
  CHECK(log_target(path, model, obs) == Approx(em_term + obs_term).epsilon(1e-12));
}

TEST_CASE("log target rejects skeletons that leave the domain") {
  const auto model = birth_death(kBdTheta);
  const TimeGrid grid(0.02, 0.01);
  SkeletonPath path(grid, {VectorXd::Constant(1, 50.0), VectorXd::Constant(1, -3.0),
                           VectorXd::Constant(1, 2.0)});
  ObservationModel obs{MatrixXd::Identity(1, 1), MatrixXd::Constant(1, 1, 0.25),
                       VectorXd::Constant(1, 2.0)};
  CHECK(log_target(path, model, obs) == kNegInf);
}

TEST_CASE("normalization is invariant to constant shifts and matches direct exponentiation") {
  const std::vector<double> base{-1.0, -2.5, 0.75, -0.2};
  const auto w1 = normalize_log_weights(base);
  std::vector<double> shifted = base;
  for (double& lw : shifted) lw += 123.0;
  const auto w2 = normalize_log_weights(shifted);
  double direct_total = 0.0;
  for (double lw : base) direct_total += std::exp(lw);
  for (std::size_t i = 0; i < base.size(); ++i) {
    CHECK(w1[i] == Approx(w2[i]).epsilon(1e-12));
    CHECK(w1[i] == Approx(std::exp(base[i]) / direct_total).epsilon(1e-12));
  }
}

TEST_CASE("relative ESS pinned values") {
  CHECK(relative_ess(std::vector<double>(10, 0.1)) == Approx(1.0).epsilon(1e-12));
  std::vector<double> onehot(100, 0.0);
  onehot[17] = 1.0;
  CHECK(relative_ess(onehot) == Approx(0.01).epsilon(1e-12));
  CHECK(relative_ess({0.5, 0.5, 0.0, 0.0}) == Approx(0.5).epsilon(1e-12));
  CHECK(relative_ess(std::vector<double>(4, 0.0)) == 0.0);
}

TEST_CASE("ESS per second pinned values and identities") {
  const std::vector<double> equal(1000, 1.0 / 1000.0);
  CHECK(ess_per_second(equal, 2.0) == Approx(500.0).epsilon(1e-12));
  CHECK(ess_per_second(equal, 1.0) == Approx(2.0 * ess_per_second(equal, 2.0)).epsilon(1e-12));
  CHECK(ess_per_second(equal, 2.0) ==
        Approx(1000.0 * relative_ess(equal) / 2.0).epsilon(1e-12));
  CHECK_THROWS_AS(ess_per_second(equal, 0.0), std::invalid_argument);
}

TEST_CASE("forward-simulation weights reduce to the observation density") {
  const auto model = lotka_volterra(kLvTheta);
  const TimeGrid grid(1.0, 0.1);
  const VectorXd x0 = (VectorXd(2) << 71, 79).finished();
  ObservationModel obs{MatrixXd::Identity(2, 2), 5.0 * MatrixXd::Identity(2, 2),
                       (VectorXd(2) << 90, 100).finished()};
  for (int j = 0; j < 50; ++j) {
    RandomSource rs(41, j);
    std::vector<VectorXd> path;
    const auto draw = simulate_bridge(ProposalKind::Fs, model, x0, grid, obs, nullptr, nullptr,
                                      rs, &path);
    if (draw.status != PathStatus::Ok) continue;
    const double g_term = log_gaussian(obs.value, path.back(), obs.noise_cov);
    CHECK(std::abs(draw.log_weight - g_term) <= 1e-10);
  }
}

TEST_CASE("single-step bridge weight matches a hand computation") {
  const auto model = birth_death(kBdTheta);
  const TimeGrid grid(0.01, 0.01);
  const VectorXd x0 = VectorXd::Constant(1, 50.0);
  const double sig_obs = 0.04, y = 49.3;
  ObservationModel obs{MatrixXd::Identity(1, 1), MatrixXd::Constant(1, 1, sig_obs),
                       VectorXd::Constant(1, y)};

  RandomSource rs(17, 0);
  std::vector<VectorXd> path;
  const auto draw =
      simulate_bridge(ProposalKind::Mdb, model, x0, grid, obs, nullptr, nullptr, rs, &path);
  REQUIRE(draw.status == PathStatus::Ok);
  const double x1 = path.back()[0];

  auto scalar_log_pdf = [](double x, double mean, double var) {
    return -0.5 * std::log(2.0 * M_PI * var) - 0.5 * (x - mean) * (x - mean) / var;
  };
  // one frozen-coefficient conditioned step done by hand
  const double mu = -0.7 * 50.0, zeta = 0.9 * 50.0, dt = 0.01;
  const double innov = dt * zeta + sig_obs;
  const double a = 50.0 + dt * mu + dt * zeta / innov * (y - 50.0 - dt * mu);
  const double v = dt * zeta - dt * dt * zeta * zeta / innov;
  const double expected = scalar_log_pdf(x1, 50.0 + dt * mu, dt * zeta) +
                          scalar_log_pdf(y, x1, sig_obs) - scalar_log_pdf(x1, a, v);
  CHECK(draw.log_weight == Approx(expected).epsilon(1e-10));
}

TEST_CASE("identical streams reproduce paths and weights bit for bit") {
  const auto model = birth_death(kBdTheta);
  const TimeGrid grid(0.5, 0.01);
  const VectorXd x0 = VectorXd::Constant(1, 50.0);
  ObservationModel obs{MatrixXd::Identity(1, 1), MatrixXd::Constant(1, 1, 1e-12),
                       VectorXd::Constant(1, 36.0)};
  const auto xi = build_xi(XiKind::Ode, model, grid, x0, &obs);
  const auto stats = sigma_suffix_stats(xi, model, grid);

  RandomSource a(3, 9), b(3, 9);
  std::vector<VectorXd> pa, pb;
  const auto da = simulate_bridge(ProposalKind::RbBarOde, model, x0, grid, obs, &xi, &stats, a, &pa);
  const auto db = simulate_bridge(ProposalKind::RbBarOde, model, x0, grid, obs, &xi, &stats, b, &pb);
  CHECK(da.log_weight == db.log_weight);
  for (std::size_t k = 0; k < pa.size(); ++k) CHECK(pa[k][0] == pb[k][0]);
}

TEST_CASE("ensembles are invariant to the worker count") {
  const auto model = lotka_volterra(kLvTheta);
  const TimeGrid grid(1.0, 0.1);
  const VectorXd x0 = (VectorXd(2) << 71, 79).finished();
  ObservationModel obs{MatrixXd::Identity(2, 2), 1e-12 * MatrixXd::Identity(2, 2),
                       (VectorXd(2) << 100, 105).finished()};
  const auto xi = build_xi(XiKind::Ode, model, grid, x0, &obs);

  const auto one = run_ensemble(ProposalKind::RbOde, model, x0, grid, obs, &xi, nullptr, 500, 77, 1);
  const auto four = run_ensemble(ProposalKind::RbOde, model, x0, grid, obs, &xi, nullptr, 500, 77, 4);
  REQUIRE(one.log_weights.size() == four.log_weights.size());
  for (std::size_t j = 0; j < one.log_weights.size(); ++j) {
    CHECK(one.log_weights[j] == four.log_weights[j]);
    CHECK(one.endpoints.col(j) == four.endpoints.col(j));
  }
}

TEST_CASE("single-path ensemble carries weight one") {
  const auto model = birth_death(kBdTheta);
  const TimeGrid grid(0.1, 0.01);
  ObservationModel obs{MatrixXd::Identity(1, 1), MatrixXd::Constant(1, 1, 1.0),
                       VectorXd::Constant(1, 45.0)};
  const auto ens = run_ensemble(ProposalKind::Mdb, model, VectorXd::Constant(1, 50.0), grid, obs,
                                nullptr, nullptr, 1, 5);
  CHECK(ens.weights == std::vector<double>{1.0});
}

TEST_CASE("forward simulation degenerates under a near-exact observation") {
  const auto model = lotka_volterra(kLvTheta);
  const TimeGrid grid(10.0, 0.1);
  const VectorXd x0 = (VectorXd(2) << 71, 79).finished();
  // endpoint of a forward draw, observed almost exactly
  RandomSource rs(600, 0);
  VectorXd y = x0;
  for (int k = 0; k < grid.n_steps(); ++k) {
    y = em_forward_step(model, y, grid.time_at(k), grid.step(), rs.gaussians(3));
  }
  ObservationModel obs{MatrixXd::Identity(2, 2), 1e-12 * MatrixXd::Identity(2, 2), y};

  const long n = 5000;
  const auto ens =
      run_ensemble(ProposalKind::Fs, model, x0, grid, obs, nullptr, nullptr, n, 601);
  const double rel = relative_ess(ens.weights);
  CHECK(rel * static_cast<double>(n) < 100.0);  // a handful of paths carry all the weight
}

TEST_CASE("weighted endpoint mean matches the forward mean when weights are flat") {
  const auto model = birth_death(kBdTheta);
  const TimeGrid grid(1.0, 0.01);
  const VectorXd x0 = VectorXd::Constant(1, 50.0);
  ObservationModel obs{MatrixXd::Identity(1, 1), MatrixXd::Constant(1, 1, 1e4),
                       VectorXd::Constant(1, 25.0)};
  const long n = 20000;
  const auto ens = run_ensemble(ProposalKind::Fs, model, x0, grid, obs, nullptr, nullptr, n, 8);

  double weighted = 0.0, unweighted = 0.0;
  for (long j = 0; j < n; ++j) {
    weighted += ens.weights[j] * ens.endpoints(0, j);
    unweighted += ens.endpoints(0, j) / static_cast<double>(n);
  }
  double var = 0.0;
  for (long j = 0; j < n; ++j) {
    var += (ens.endpoints(0, j) - unweighted) * (ens.endpoints(0, j) - unweighted);
  }
  var /= static_cast<double>(n - 1);
  CHECK(std::abs(weighted - unweighted) < 4.0 * std::sqrt(var / n));
}

TEST_CASE("an all-rejected ensemble is flagged and scores zero ESS") {
  DiffusionModel doomed;
  doomed.name = "doomed";
  doomed.dim = 1;
  doomed.noise_dim = 1;
  doomed.drift = [](const VectorXd&, double) { return VectorXd::Constant(1, -100.0); };
  doomed.sigma = [](const VectorXd&, double) { return MatrixXd::Identity(1, 1); };
  doomed.zeta = [](const VectorXd&, double) { return MatrixXd::Identity(1, 1); };
  doomed.valid = [](const VectorXd& x) { return x[0] >= 0.0; };
  const TimeGrid grid(1.0, 0.5);
  ObservationModel obs{MatrixXd::Identity(1, 1), MatrixXd::Constant(1, 1, 1.0),
                       VectorXd::Constant(1, 0.0)};
  const auto ens = run_ensemble(ProposalKind::Fs, doomed, VectorXd::Constant(1, 1.0), grid, obs,
                                nullptr, nullptr, 50, 3);
  CHECK(ens.all_rejected);
  CHECK(ens.domain_rejections == 50);
  CHECK(relative_ess(ens.weights) == 0.0);
  CHECK(ess_per_second(ens.weights, 1.0) == 0.0);
}

TEST_CASE("rejected paths keep zero weight and are counted") {
  // a decaying population started near zero crosses the boundary often
  const auto model = birth_death(kBdTheta);
  const TimeGrid grid(1.0, 0.1);
  const VectorXd x0 = VectorXd::Constant(1, 0.4);
  ObservationModel obs{MatrixXd::Identity(1, 1), MatrixXd::Constant(1, 1, 1.0),
                       VectorXd::Constant(1, 0.2)};
  const long n = 2000;
  const auto ens = run_ensemble(ProposalKind::Fs, model, x0, grid, obs, nullptr, nullptr, n, 9);
  REQUIRE(ens.domain_rejections > 0);
  CHECK(ens.domain_rejections + ens.numeric_rejections < n);  // some survivors

  double total = 0.0;
  for (long j = 0; j < n; ++j) {
    if (ens.statuses[j] != PathStatus::Ok) {
      CHECK(ens.weights[j] == 0.0);
      CHECK(ens.log_weights[j] == kNegInf);
    }
    total += ens.weights[j];
  }
  CHECK(total == Approx(1.0).margin(1e-12));
}
