#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "moffle/dp.hpp"
#include "moffle/errors.hpp"
#include "moffle/generators.hpp"
#include "moffle/rep_learning.hpp"

using namespace moffle;

namespace {

struct Setup {
  LatentLowRankMDP mdp;
  FeatureClass phis;
  TransitionDataset data;
  int h;
};

Setup make_setup(std::uint64_t seed, int h, int n) {
  Setup s{generate_env(EnvParams{}, RngStream(seed)), {}, {}, h};
  s.phis = generate_feature_class(s.mdp, FeatureGenParams{}, RngStream(seed + 1));
  s.data = collect_dataset(s.mdp, Policy::uniform(s.mdp), h, n, RngStream(seed + 2));
  return s;
}

FeatureMap zero_map_like(const FeatureMap& phi) {
  FeatureMap z = phi;
  z.values.setZero();
  z.label = "zero";
  return z;
}

Vector random_w(int d, RngStream& rng) {
  Vector w(d);
  for (int j = 0; j < d; ++j) w[j] = rng.normal();
  return w;
}

}  // namespace

TEST_CASE("design cache statistics match explicit designs") {
  const Setup s = make_setup(1, 1, 400);
  const std::vector<FeatureMap>& cands = s.phis.level(1);
  const DesignCache cache = build_design_cache(s.data, cands, s.mdp.states_at(2));
  const int n = s.data.size();
  REQUIRE(cache.n == n);

  RngStream rng(2);
  Vector target(s.mdp.states_at(2));
  for (int x = 0; x < target.size(); ++x) target[x] = rng.uniform();

  for (std::size_t k = 0; k < cands.size(); ++k) {
    Matrix X(n, cands[k].d);
    Vector y(n);
    for (int i = 0; i < n; ++i) {
      X.row(i) = cands[k].row(s.data.rows[i][0], s.data.rows[i][1]).transpose();
      y[i] = target[s.data.rows[i][2]];
    }
    CHECK((cache.per_phi[k].gram - X.transpose() * X / n).norm() < 1e-10);
    CHECK((cache.b(static_cast<int>(k), target) - X.transpose() * y / n).norm() < 1e-10);
    CHECK(cache.target_sq(target) == doctest::Approx(y.squaredNorm() / n).epsilon(1e-12));

    const Vector w = random_w(cands[k].d, rng);
    CHECK(cache.loss_at(static_cast<int>(k), w, target) ==
          doctest::Approx(empirical_loss(X, w, y).mean).epsilon(1e-10));
    const LsqResult fit = cache.fit(static_cast<int>(k), target, 1.0);
    const LsqResult direct = constrained_lsq(X, y, 1.0);
    CHECK((fit.w - direct.w).norm() < 1e-7);
  }
}

TEST_CASE("exact design cache turns losses into population Bellman errors") {
  const Setup s = make_setup(3, 0, 10);
  const Matrix occ = exact_state_action_occupancy(s.mdp, Policy::uniform(s.mdp), 0);
  const std::vector<FeatureMap> cands = {s.phis.at(0, 0)};  // phi*
  const DesignCache cache = build_exact_design_cache(s.mdp, 0, cands, occ);

  RngStream rng(4);
  Vector f(s.mdp.states_at(1));
  for (int x = 0; x < f.size(); ++x) f[x] = rng.uniform();
  const BellmanBackup bb = exact_bellman_backup(s.mdp, 0, f);

  // phi* realizes the backup, so the minimum population loss is zero.
  const LsqResult fit = cache.fit(0, f, std::sqrt(static_cast<double>(s.mdp.d)));
  CHECK(cache.loss_at(0, fit.w, f) < 1e-10);
  CHECK(cache.loss_at(0, bb.theta, f) < 1e-14);

  // And the loss at any w is the exact occupancy-weighted squared distance
  // from the one-step backup (targets are conditional means, not samples).
  const Vector w = random_w(s.mdp.d, rng);
  double expected = 0.0;
  for (int x = 0; x < s.mdp.states_at(0); ++x) {
    for (int a = 0; a < s.mdp.K; ++a) {
      const double diff = cands[0].row(x, a).dot(w) - bb.values(x, a);
      expected += occ(x, a) * diff * diff;
    }
  }
  CHECK(cache.loss_at(0, w, f) == doctest::Approx(expected).epsilon(1e-10));
}

TEST_CASE("min-max-min on a singleton class returns it with a small objective") {
  const Setup s = make_setup(5, 1, 4000);
  const std::vector<FeatureMap> cands = {s.phis.at(1, 0)};
  DiscriminatorFamily family;
  family.kind = DiscriminatorKind::FClipped;
  const std::vector<FeatureMap>& next = s.phis.level(2);
  family.phi_next = &next;
  family.theta_radius = std::sqrt(static_cast<double>(s.mdp.d));

  FloOptions opt;
  opt.outer_radius = std::sqrt(static_cast<double>(s.mdp.d));
  opt.correction_radius = std::sqrt(static_cast<double>(s.mdp.d));
  opt.search_seed = 11;
  OracleReport report;
  const int pick = flo_minmaxmin(cands, family, s.data, opt, &report);
  CHECK(pick == 0);
  CHECK(report.chosen_index == 0);
  CHECK(report.termination == "one_shot");
  // phi* fits every family member up to sampling noise.
  CHECK(report.objective < 0.05);
}

TEST_CASE("min-max-min prefers the canonical features over a zero map") {
  const Setup s = make_setup(6, 0, 4000);
  const std::vector<FeatureMap> cands = {zero_map_like(s.phis.at(0, 0)), s.phis.at(0, 0)};
  DiscriminatorFamily family;
  family.kind = DiscriminatorKind::FClipped;
  const std::vector<FeatureMap>& next = s.phis.level(1);
  family.phi_next = &next;
  family.theta_radius = std::sqrt(static_cast<double>(s.mdp.d));
  FloOptions opt;
  opt.outer_radius = std::sqrt(static_cast<double>(s.mdp.d));
  opt.correction_radius = std::sqrt(static_cast<double>(s.mdp.d));
  opt.search_seed = 12;
  OracleReport report;
  CHECK(flo_minmaxmin(cands, family, s.data, opt, &report) == 1);
  CHECK(report.chosen_label == cands[1].label);
}

TEST_CASE("simplex families enumerate coordinates exactly") {
  EnvParams p;
  const LatentLowRankMDP mdp = generate_env(p, RngStream(7));
  const FeatureClass phis = generate_feature_class(mdp, FeatureGenParams{}, RngStream(8));
  const TransitionDataset data =
      collect_dataset(mdp, Policy::uniform(mdp), 1, 3000, RngStream(9));
  const std::vector<FeatureMap> cands = {zero_map_like(phis.at(1, 0)), phis.at(1, 0)};
  DiscriminatorFamily family;
  family.kind = DiscriminatorKind::SimplexCoord;
  const std::vector<FeatureMap>& next = phis.level(2);
  family.phi_next = &next;
  FloOptions opt;
  opt.outer_radius = std::sqrt(static_cast<double>(mdp.d));
  opt.correction_radius = std::sqrt(static_cast<double>(mdp.d));
  OracleReport report;
  CHECK(flo_minmaxmin(cands, family, data, opt, &report) == 1);
  CHECK(report.exact_search);
}

TEST_CASE("eigen route: singleton classes and self triples have zero objective") {
  const Setup s = make_setup(10, 1, 500);
  const std::vector<FeatureMap> cands = {s.phis.at(1, 0)};
  FloEigenOptions opt;
  OracleReport report;
  CHECK(flo_eigen(cands, s.phis.level(2), s.data, opt, &report) == 0);
  CHECK(report.exact_search);
  CHECK(report.objective == doctest::Approx(0.0));

  RngStream rng(11);
  Matrix X(40, 3), Xn(40, 2);
  for (int i = 0; i < 40; ++i) {
    for (int j = 0; j < 3; ++j) X(i, j) = rng.normal();
    for (int j = 0; j < 2; ++j) Xn(i, j) = rng.normal();
  }
  // phi~ == phi makes the residual difference vanish identically.
  const QuadMax qm = flo_eigen_triple(X, X, Xn, 0.3, 1.5);
  CHECK(qm.value == doctest::Approx(0.0));
}

TEST_CASE("eigen route prefers the canonical features over a zero map") {
  const Setup s = make_setup(12, 1, 4000);
  const std::vector<FeatureMap> cands = {zero_map_like(s.phis.at(1, 0)), s.phis.at(1, 0)};
  FloEigenOptions opt;
  OracleReport report;
  CHECK(flo_eigen(cands, s.phis.level(2), s.data, opt, &report) == 1);
  CHECK(report.objective <= 0.0 + 1e-12);
}

TEST_CASE("eigen triple matches a dense brute-force scan in two dimensions") {
  RngStream rng(13);
  for (int inst = 0; inst < 5; ++inst) {
    const int n = 30;
    Matrix X(n, 2), Xt(n, 2), Xn(n, 2);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < 2; ++j) {
        X(i, j) = rng.normal();
        Xt(i, j) = rng.normal();
        Xn(i, j) = rng.normal();
      }
      X.row(i) /= std::max(1.0, X.row(i).norm());
      Xt.row(i) /= std::max(1.0, Xt.row(i).norm());
      Xn.row(i) /= std::max(1.0, Xn.row(i).norm());
    }
    const double lambda = 0.2 + rng.uniform();
    const double radius = std::sqrt(2.0);
    const QuadMax qm = flo_eigen_triple(X, Xt, Xn, lambda, radius);

    const Matrix B1 = ResidualOperator(X, lambda).dense() * Xn;
    const Matrix B2 = ResidualOperator(Xt, lambda).dense() * Xn;
    double best = 0.0;
    const int grid = 20000;
    for (int g = 0; g < grid; ++g) {
      const double ang = 2.0 * M_PI * g / grid;
      Vector theta(2);
      theta << radius * std::cos(ang), radius * std::sin(ang);
      best = std::max(best, ((B1 * theta).squaredNorm() - (B2 * theta).squaredNorm()) / n);
    }
    CHECK(std::abs(qm.value - best) <= 1e-3 * std::max(1.0, std::abs(best)));
  }
}

TEST_CASE("greedy selection on a realizable class stops almost immediately") {
  const Setup s = make_setup(14, 0, 5000);
  const std::vector<FeatureMap> cands = {s.phis.at(0, 0)};
  DiscriminatorFamily family;
  family.kind = DiscriminatorKind::FClipped;
  const std::vector<FeatureMap>& next = s.phis.level(1);
  family.phi_next = &next;
  family.theta_radius = std::sqrt(static_cast<double>(s.mdp.d));

  GreedyConfig cfg;
  cfg.eps_tol = 0.05;
  cfg.L = 1.0;
  cfg.d = s.mdp.d;
  cfg.search_seed = 15;
  OracleReport report;
  CHECK(greedy_select(cands, family, s.data, cfg, &report) == 0);
  CHECK_FALSE(report.budget_exhausted);
  CHECK(report.iterations < cfg.t_max());
  CHECK(static_cast<int>(report.witnesses.size()) == report.iterations);
  CHECK((report.termination == "converged"));
}

TEST_CASE("greedy budget arithmetic") {
  GreedyConfig cfg;
  cfg.eps_tol = 0.1;
  cfg.L = 1.0;
  cfg.d = 2;
  CHECK(cfg.t_max() == 2080);
  CHECK(cfg.eps0() == doctest::Approx(0.1 / 208.0).epsilon(1e-15));
  CHECK(cfg.stop_threshold() ==
        doctest::Approx(96.0 * cfg.eps0() + cfg.eps0() * cfg.eps0()).epsilon(1e-15));
  CHECK(cfg.radius_at(4) == doctest::Approx(std::sqrt(8.0) / 2.0).epsilon(1e-15));
  CHECK(cfg.final_radius() == doctest::Approx(std::sqrt(13.0 * 8.0 / 0.1)).epsilon(1e-15));

  GreedyConfig ref;
  ref.eps_tol = 0.05;
  ref.L = 1.0;
  ref.d = 3;
  CHECK(ref.t_max() == 9360);
}

TEST_CASE("oracle reports record witnesses and wall time") {
  const Setup s = make_setup(16, 1, 2000);
  const std::vector<FeatureMap> cands = {zero_map_like(s.phis.at(1, 0)), s.phis.at(1, 0)};
  DiscriminatorFamily family;
  family.kind = DiscriminatorKind::FClipped;
  const std::vector<FeatureMap>& next = s.phis.level(2);
  family.phi_next = &next;
  family.theta_radius = std::sqrt(static_cast<double>(s.mdp.d));
  GreedyConfig cfg;
  cfg.eps_tol = 0.2;
  cfg.d = s.mdp.d;
  cfg.search_seed = 17;
  OracleReport report;
  greedy_select(cands, family, s.data, cfg, &report);
  REQUIRE(!report.witnesses.empty());
  CHECK(report.witnesses.front().iteration == 1);
  CHECK(report.wall_seconds >= 0.0);
  for (const WitnessRecord& w : report.witnesses) {
    CHECK(!w.phi_next_label.empty());
    CHECK(w.theta.size() == s.mdp.d);
  }
}

TEST_CASE("family validation catches missing pieces") {
  DiscriminatorFamily family;
  family.kind = DiscriminatorKind::FClipped;
  CHECK_THROWS_AS(family.validate(), EmptyClass);
  const std::vector<FeatureMap> empty;
  family.phi_next = &empty;
  CHECK_THROWS_AS(family.validate(), EmptyClass);
}
