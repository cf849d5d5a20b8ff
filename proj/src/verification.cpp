#include "moffle/verification.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

#include "moffle/dp.hpp"
#include "moffle/driver.hpp"
#include "moffle/generators.hpp"
#include "moffle/harness.hpp"
#include "moffle/io.hpp"
#include "moffle/planners.hpp"
#include "moffle/regression.hpp"
#include "moffle/rep_learning.hpp"

namespace moffle {

namespace {

struct Shared {
  std::string scratch;
  bool verbose = false;
  RunConfig cfg;
  LatentLowRankMDP env;
  FeatureClass phis;
  std::vector<RewardFunction> rewards;
  std::string first_metrics;  // end-to-end run, reused by the determinism check
};

RunConfig reference_config() {
  RunConfig cfg;
  cfg.values["seed"] = "7";
  cfg.values["env.H"] = "3";
  cfg.values["env.K"] = "2";
  cfg.values["env.d"] = "3";
  cfg.values["env.states_per_level"] = "12";
  cfg.values["env.eta_floor"] = "0.05";
  cfg.values["features.decoy_count"] = "3";
  cfg.values["rewards.count"] = "3";
  cfg.values["moffle.oracle"] = "eigen";
  cfg.values["moffle.beta"] = "0.4";
  cfg.values["moffle.n_phi_hat"] = "10000";
  cfg.values["moffle.n_ell"] = "10000";
  cfg.values["moffle.n_phi_bar"] = "10000";
  cfg.values["moffle.n_plan"] = "10000";
  cfg.values["plan.variant"] = "full_class";
  return cfg;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

// Uniform draw from the radius-B euclidean ball.
Vector ball_point(RngStream& rng, int d, double radius) {
  Vector g(d);
  for (int i = 0; i < d; ++i) g[i] = rng.normal();
  const double nrm = g.norm();
  if (nrm == 0.0) return Vector::Zero(d);
  return g * (radius * std::pow(rng.uniform(), 1.0 / d) / nrm);
}

// ---------------------------------------------------------------------------
// 1. Backups of arbitrary next-level functions are linear in phi*.

bool crit_backup_linearity(Shared& sh, std::string& detail) {
  RngStream rng = RngStream(7).derive("crit1");
  const LatentLowRankMDP& env = sh.env;
  const double cap = std::sqrt(static_cast<double>(env.d));
  double worst_err = 0.0;
  double worst_norm = 0.0;
  for (int h = 0; h < env.H; ++h) {
    for (int rep = 0; rep < 100; ++rep) {
      Vector f(env.states_at(h + 1));
      for (int x = 0; x < f.size(); ++x) f[x] = rng.uniform();
      const BellmanBackup bb = exact_bellman_backup(env, h, f);
      for (int x = 0; x < env.states_at(h); ++x) {
        for (int a = 0; a < env.K; ++a) {
          const double lin = env.phi_star_row(h, x, a).dot(bb.theta);
          worst_err = std::max(worst_err, std::abs(bb.values(x, a) - lin));
        }
      }
      worst_norm = std::max(worst_norm, bb.theta.norm());
    }
  }
  detail = "max |backup - <phi*, theta>| = " + fmt(worst_err) + ", max ||theta|| = " +
           fmt(worst_norm) + " (cap " + fmt(cap) + ")";
  return worst_err < 1e-10 && worst_norm <= cap + 1e-12;
}

// ---------------------------------------------------------------------------
// 2. Norm conditions of the factorization.

bool crit_norm_conditions(Shared& sh, std::string& detail) {
  RngStream rng = RngStream(7).derive("crit2");
  const LatentLowRankMDP& env = sh.env;
  const double cap = std::sqrt(static_cast<double>(env.d));
  double worst_phi = 0.0;
  double worst_mu = 0.0;
  for (int h = 0; h < env.H; ++h) {
    for (int r = 0; r < env.psi[h].rows(); ++r) {
      worst_phi = std::max(worst_phi, env.psi[h].row(r).norm());
    }
    for (int rep = 0; rep < 100; ++rep) {
      Vector g(env.states_at(h + 1));
      for (int x = 0; x < g.size(); ++x) g[x] = rng.uniform();
      worst_mu = std::max(worst_mu, (env.nu[h] * g).norm());
    }
  }
  detail = "max ||phi*|| = " + fmt(worst_phi) + ", max ||sum g mu*|| = " + fmt(worst_mu) +
           " (cap " + fmt(cap) + ")";
  return worst_phi <= 1.0 + 1e-12 && worst_mu <= cap + 1e-12;
}

// ---------------------------------------------------------------------------
// 3. Regression kernel: constrained solver optimality, quadratic-form
//    maximization vs grid search, residual-operator loss identity.

bool crit_regression_kernel(Shared&, std::string& detail) {
  RngStream rng = RngStream(7).derive("crit3");

  double worst_margin = 0.0;  // most any random point beat the solver by
  for (int inst = 0; inst < 50; ++inst) {
    const int n = 20 + inst % 30;
    const int d = 2 + inst % 4;
    Matrix X(n, d);
    Vector y(n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < d; ++j) X(i, j) = rng.normal();
      y[i] = rng.normal();
    }
    const double B = 0.1 + 1.9 * rng.uniform();
    const LsqResult res = constrained_lsq(X, y, B);
    if (res.w.norm() > B * (1.0 + 1e-6)) {
      detail = "solution norm " + fmt(res.w.norm()) + " exceeds B = " + fmt(B);
      return false;
    }
    const double solver_loss = empirical_loss(X, res.w, y).mean;
    for (int j = 0; j < 10000; ++j) {
      const Vector w = ball_point(rng, d, B);
      const double loss = empirical_loss(X, w, y).mean;
      worst_margin = std::max(worst_margin, solver_loss - loss);
    }
  }
  if (worst_margin > 1e-9) {
    detail = "random feasible point beat constrained_lsq by " + fmt(worst_margin);
    return false;
  }

  double worst_quad = 0.0;
  for (int d = 2; d <= 3; ++d) {
    for (int inst = 0; inst < 8; ++inst) {
      Matrix M(d, d);
      for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) M(i, j) = 2.0 * rng.uniform() - 1.0;
      }
      const double radius = 0.5 + 1.5 * rng.uniform();
      const QuadMax qm = sym_quad_max(M, radius);
      double grid = 0.0;  // theta = 0 is always feasible
      if (d == 2) {
        for (int k = 0; k < 20000; ++k) {
          const double ang = 2.0 * M_PI * k / 20000.0;
          Vector v(2);
          v << radius * std::cos(ang), radius * std::sin(ang);
          grid = std::max(grid, v.dot(M * v));
        }
      } else {
        for (int ki = 0; ki <= 400; ++ki) {
          const double th = M_PI * ki / 400.0;
          for (int kj = 0; kj < 800; ++kj) {
            const double ph = 2.0 * M_PI * kj / 800.0;
            Vector v(3);
            v << radius * std::sin(th) * std::cos(ph), radius * std::sin(th) * std::sin(ph),
                radius * std::cos(th);
            grid = std::max(grid, v.dot(M * v));
          }
        }
      }
      worst_quad = std::max(worst_quad, std::abs(qm.value - grid) / std::max(1.0, std::abs(grid)));
      if (std::abs(qm.argmax.dot(M * qm.argmax) - qm.value) > 1e-9 * std::max(1.0, qm.value)) {
        detail = "argmax does not reproduce the reported value";
        return false;
      }
    }
  }
  if (worst_quad > 1e-3) {
    detail = "sym_quad_max off grid search by " + fmt(worst_quad) + " relative";
    return false;
  }

  double worst_identity = 0.0;
  for (int inst = 0; inst < 20; ++inst) {
    const int n = 30, d = 3;
    Matrix X(n, d);
    Vector y(n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < d; ++j) X(i, j) = rng.normal();
      y[i] = rng.normal();
    }
    const double lambda = 0.05 + rng.uniform();
    const ResidualOperator A(X, lambda);
    const Vector resid = A.apply(y);
    const double lhs = resid.squaredNorm();
    const double rhs = empirical_loss(X, ridge_solve(X, y, lambda), y).sum;
    worst_identity = std::max(worst_identity, std::abs(lhs - rhs));
    const Vector dense = A.dense() * y;
    worst_identity = std::max(worst_identity, (dense - resid).lpNorm<Eigen::Infinity>());
  }
  if (worst_identity > 1e-10) {
    detail = "residual-operator loss identity off by " + fmt(worst_identity);
    return false;
  }

  detail = "lsq margin " + fmt(worst_margin) + ", quad-vs-grid " + fmt(worst_quad) +
           ", loss identity " + fmt(worst_identity);
  return true;
}

// ---------------------------------------------------------------------------
// 4. Eigen-route objective equals brute force per triple; selects phi* over a
//    zero feature map.

bool crit_flo_eigen(Shared& sh, std::string& detail) {
  RngStream rng = RngStream(7).derive("crit4");
  const int n = 30, d = 2;
  double worst = 0.0;
  for (int inst = 0; inst < 20; ++inst) {
    const auto random_rows = [&](Matrix& out) {
      out.resize(n, d);
      for (int i = 0; i < n; ++i) {
        Vector row = ball_point(rng, d, 1.0);
        out.row(i) = row.transpose();
      }
    };
    Matrix X, Xt, Xn;
    random_rows(X);
    random_rows(Xt);
    random_rows(Xn);
    const double lambda = 0.2 + rng.uniform();
    const double radius = std::sqrt(static_cast<double>(d));
    const QuadMax qm = flo_eigen_triple(X, Xt, Xn, lambda, radius);

    const Matrix B1 = ResidualOperator(X, lambda).dense() * Xn;
    const Matrix B2 = ResidualOperator(Xt, lambda).dense() * Xn;
    double brute = 0.0;  // theta = 0 feasible
    for (int k = 0; k < 200000; ++k) {
      const double ang = 2.0 * M_PI * k / 200000.0;
      Vector th(2);
      th << radius * std::cos(ang), radius * std::sin(ang);
      const double val = ((B1 * th).squaredNorm() - (B2 * th).squaredNorm()) / n;
      brute = std::max(brute, val);
    }
    worst = std::max(worst, std::abs(qm.value - brute) / std::max(1.0, std::abs(brute)));
  }
  if (worst > 1e-3) {
    detail = "eigen objective off brute force by " + fmt(worst) + " relative";
    return false;
  }

  // phi* beats an uninformative representation at every level.
  const LatentLowRankMDP& env = sh.env;
  for (int h = 0; h < env.H; ++h) {
    FeatureMap star = feature_map_from_psi(env, h, "star");
    FeatureMap zero = star;
    zero.values.setZero();
    zero.label = "zero";
    const std::vector<FeatureMap> cands = {star, zero};
    std::vector<FeatureMap> next;
    if (h + 1 < env.H) {
      next.push_back(feature_map_from_psi(env, h + 1, "next"));
    } else {
      FeatureMap last;
      last.level = env.H;
      last.d = env.d;
      last.num_states = env.states_at(env.H);
      last.num_actions = env.K;
      last.values = sh.phis.at(env.H, 0).values;
      last.label = "terminal";
      next.push_back(last);
    }
    const TransitionDataset data =
        collect_dataset(env, Policy::uniform(env), h, 2000, rng.derive(h));
    OracleReport report;
    const int pick = flo_eigen(cands, next, data, FloEigenOptions{}, &report);
    if (pick != 0) {
      detail = "level " + std::to_string(h) + " picked the zero feature map";
      return false;
    }
  }
  detail = "triple objective vs brute force " + fmt(worst) + " relative; phi* beat zero at all levels";
  return true;
}

// ---------------------------------------------------------------------------
// 5. Iterative greedy selection terminates early and returns a representation
//    with small exact population Bellman error.

bool crit_greedy(Shared& sh, std::string& detail) {
  const LatentLowRankMDP& env = sh.env;
  RngStream rng = RngStream(7).derive("crit5");
  GreedyConfig gcfg;
  gcfg.eps_tol = 0.05;
  gcfg.L = 1.0;
  gcfg.d = env.d;
  const int cap = gcfg.t_max();
  const double disc_radius = std::sqrt(static_cast<double>(env.d));
  const double fit_radius = gcfg.L * std::sqrt(static_cast<double>(env.d));

  std::ostringstream note;
  int max_iters = 0;
  double max_excess = 0.0;
  const Policy uniform = Policy::uniform(env);
  for (int h = 0; h < env.H; ++h) {
    const TransitionDataset data = collect_dataset(env, uniform, h, 10000, rng.derive(h));
    DiscriminatorFamily family;
    family.kind = DiscriminatorKind::FClipped;
    family.phi_next = &sh.phis.level(h + 1);
    family.theta_radius = disc_radius;
    GreedyConfig cfg_h = gcfg;
    cfg_h.search_seed = rng.derive("seed").derive(h).key();
    OracleReport report;
    const int pick = greedy_select(sh.phis.level(h), family, data, cfg_h, &report);
    max_iters = std::max(max_iters, report.iterations);
    if (report.budget_exhausted) {
      detail = "level " + std::to_string(h) + " hit the iteration cap " + std::to_string(cap);
      return false;
    }

    // Exact population Bellman error of the winner over sampled test functions.
    const Matrix occ = exact_state_action_occupancy(env, uniform, h);
    const std::vector<FeatureMap> chosen = {sh.phis.at(h, pick)};
    const DesignCache cache = build_exact_design_cache(env, h, chosen, occ);
    RngStream disc_rng = rng.derive("disc").derive(h);
    for (int rep = 0; rep < 200; ++rep) {
      Discriminator v;
      v.kind = DiscriminatorKind::FClipped;
      v.phi_next = &sh.phis.at(h + 1, disc_rng.uniform_int(sh.phis.count(h + 1)));
      v.theta = ball_point(disc_rng, env.d, disc_radius);
      const Vector s = eval_discriminator_table(v);
      const LsqResult fit = cache.fit(0, s, fit_radius);
      max_excess = std::max(max_excess, cache.loss_at(0, fit.w, s));
    }
    note << (h > 0 ? " " : "") << "h" << h << ":" << report.iterations << "it,phi" << pick;
  }
  detail = note.str() + "; cap " + std::to_string(cap) + ", max population excess " +
           fmt(max_excess) + " (cap " + fmt(2.0 * gcfg.eps_tol) + ")";
  return max_excess <= 2.0 * gcfg.eps_tol;
}

// ---------------------------------------------------------------------------
// 6. Elliptical planner: iteration bound, exact post-termination bonus value,
//    FQE accuracy per call.

bool crit_elliptical(Shared& sh, std::string& detail) {
  const LatentLowRankMDP& env = sh.env;
  RngStream rng = RngStream(7).derive("crit6");
  const double beta = 0.4;
  const int h_last = env.H - 1;
  const int cap = static_cast<int>(std::ceil(8.0 * env.d / beta * std::log(1.0 + 8.0 / beta)));

  FeatureClass stars;
  stars.levels.resize(env.H);
  stars.star_index.assign(env.H, 0);
  for (int h = 0; h < env.H; ++h) {
    stars.levels[h].push_back(feature_map_from_psi(env, h, "phi_star_h" + std::to_string(h)));
  }

  const Policy uniform = Policy::uniform(env);
  std::vector<TransitionDataset> data;
  std::vector<const TransitionDataset*> ptrs;
  for (int h = 0; h <= h_last; ++h) {
    data.push_back(collect_dataset(env, uniform, h, 5000, rng.derive(h)));
  }
  for (const auto& d : data) ptrs.push_back(&d);
  const PlannerWorkspace ws = PlannerWorkspace::build(ptrs, stars, env);

  const EllipticalResult res = elliptical_planner(ws, stars.at(h_last, 0), h_last, beta, cap + 5);
  if (!res.halted || static_cast<int>(res.trace.size()) > cap) {
    detail = "ran " + std::to_string(res.trace.size()) + " iterations (cap " +
             std::to_string(cap) + ", halted " + std::to_string(res.halted) + ")";
    return false;
  }

  const Matrix gamma_inv = res.gamma.llt().solve(Matrix::Identity(env.d, env.d));
  Matrix bonus(env.states_at(h_last), env.K);
  for (int x = 0; x < env.states_at(h_last); ++x) {
    for (int a = 0; a < env.K; ++a) {
      const Vector v = stars.at(h_last, 0).row(x, a);
      bonus(x, a) = clip(v.dot(gamma_inv * v), 0.0, 1.0);
    }
  }
  const double residual = value_iteration_terminal(env, h_last, bonus).value;

  double worst_fqe = 0.0;
  for (size_t t = 0; t < res.trace.size(); ++t) {
    const RewardFunction r_t =
        terminal_reward(env, h_last, res.iteration_rewards[t], "bonus_t" + std::to_string(t));
    const double exact = exact_policy_value(env, res.mixture.members[t], r_t);
    worst_fqe = std::max(worst_fqe, std::abs(res.trace[t].v_hat - exact));
  }

  detail = std::to_string(res.trace.size()) + " iterations (cap " + std::to_string(cap) +
           "), exact max bonus " + fmt(residual) + " (cap " + fmt(2.0 * beta) +
           "), max FQE error " + fmt(worst_fqe);
  return residual <= 2.0 * beta && worst_fqe <= 0.05;
}

// ---------------------------------------------------------------------------
// 7. End-to-end exploration + planning on the reference configuration.

bool crit_end_to_end(Shared& sh, std::string& detail) {
  const std::string dir = sh.scratch + "/run_a";
  const E2eSummary summary = run_e2e(sh.cfg, dir);
  sh.first_metrics = metrics_csv(summary);

  double worst_gap = 0.0;
  for (double g : summary.reward_gap) {
    if (g < -1e-9) {
      detail = "policy value exceeded v* by " + fmt(-g);
      return false;
    }
    worst_gap = std::max(worst_gap, g);
  }
  const double gap_cap = 0.15 * sh.env.H;
  detail = "min latent occupancy " + fmt(summary.cover_report.min_latent_occ) + " (floor " +
           fmt(summary.cover_report.eta_over_2kappa) + "), worst reward gap " + fmt(worst_gap) +
           " (cap " + fmt(gap_cap) + ")";
  return summary.cover_report.coverage_ok && worst_gap <= gap_cap + 1e-9;
}

// ---------------------------------------------------------------------------
// 8. Exact-population FQI over the full class reproduces value iteration.

bool crit_fqi_exact(Shared&, std::string& detail) {
  RngStream rng = RngStream(7).derive("crit8");
  EnvParams params;
  double worst = 0.0;
  for (int i = 0; i < 10; ++i) {
    const RngStream sub = rng.derive(i);
    const LatentLowRankMDP env = generate_env(params, sub.derive("env"));
    const RewardFunction reward = generate_reward_class(env, 1, sub.derive("reward"))[0];

    FeatureClass stars;
    stars.levels.resize(env.H);
    stars.star_index.assign(env.H, 0);
    for (int h = 0; h < env.H; ++h) {
      stars.levels[h].push_back(feature_map_from_psi(env, h, "phi_star_h" + std::to_string(h)));
    }
    const PlannerWorkspace ws = PlannerWorkspace::build_exact(env, stars);
    const double radius = env.H * std::sqrt(static_cast<double>(env.d));
    const FqiResult fq = fqi(ws, reward, FqiVariant::FullClass, radius, env.H);
    const ValueIterationResult vi = value_iteration(env, reward);
    worst = std::max(worst, std::abs(fq.v_init - vi.optimal_value));
    worst = std::max(worst, vi.optimal_value - exact_policy_value(env, fq.policy, reward));
  }
  detail = "max |FQI - VI| over 10 environments = " + fmt(worst);
  return worst <= 1e-8;
}

// ---------------------------------------------------------------------------
// 9. Two identical end-to-end runs produce byte-identical metric CSVs.

bool crit_determinism(Shared& sh, std::string& detail) {
  if (sh.first_metrics.empty()) {
    const E2eSummary first = run_e2e(sh.cfg, sh.scratch + "/run_a");
    sh.first_metrics = metrics_csv(first);
  }
  const E2eSummary second = run_e2e(sh.cfg, sh.scratch + "/run_b");
  const std::string repeat = metrics_csv(second);

  std::ifstream in_a(sh.scratch + "/run_a/metrics.csv", std::ios::binary);
  std::ifstream in_b(sh.scratch + "/run_b/metrics.csv", std::ios::binary);
  std::stringstream buf_a, buf_b;
  buf_a << in_a.rdbuf();
  buf_b << in_b.rdbuf();

  const bool same = repeat == sh.first_metrics && buf_a.str() == buf_b.str() &&
                    buf_a.str() == sh.first_metrics;
  detail = same ? "metrics byte-identical across runs (" +
                      std::to_string(sh.first_metrics.size()) + " bytes)"
                : "metric CSVs differ between identical runs";
  return same;
}

}  // namespace

std::vector<CriterionResult> run_acceptance(const std::string& scratch_dir, bool verbose) {
  Shared sh;
  sh.scratch = scratch_dir;
  sh.verbose = verbose;
  sh.cfg = reference_config();

  const RngStream root(7);
  sh.env = generate_env(sh.cfg.env_params(), root.derive("env"));
  sh.phis = generate_feature_class(sh.env, sh.cfg.feature_params(), root.derive("features"));
  sh.rewards = generate_reward_class(sh.env, 3, root.derive("rewards"));

  struct Entry {
    int id;
    const char* name;
    std::function<bool(Shared&, std::string&)> fn;
  };
  const std::vector<Entry> entries = {
      {1, "backup linearity in phi*", crit_backup_linearity},
      {2, "factorization norm conditions", crit_norm_conditions},
      {3, "regression kernel", crit_regression_kernel},
      {4, "eigen-route oracle vs brute force", crit_flo_eigen},
      {5, "greedy representation selection", crit_greedy},
      {6, "elliptical planner", crit_elliptical},
      {7, "end-to-end cover and planning", crit_end_to_end},
      {8, "exact-population FQI vs value iteration", crit_fqi_exact},
      {9, "determinism of metric CSVs", crit_determinism},
  };

  std::vector<CriterionResult> results;
  for (const auto& e : entries) {
    CriterionResult r;
    r.id = e.id;
    r.name = e.name;
    const auto start = std::chrono::steady_clock::now();
    try {
      r.pass = e.fn(sh, r.detail);
    } catch (const std::exception& ex) {
      r.pass = false;
      r.detail = std::string("exception: ") + ex.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (verbose) {
      std::printf("[%s] %d. %s (%.1fs) %s\n", r.pass ? "PASS" : "FAIL", r.id, r.name.c_str(),
                  r.seconds, r.detail.c_str());
      std::fflush(stdout);
    }
    results.push_back(std::move(r));
  }
  return results;
}

}  // namespace moffle
