#include "moffle/driver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "moffle/errors.hpp"

namespace moffle {

namespace {

double beta_condition(double b) { return b * std::log(1.0 + 8.0 / b); }

}  // namespace

double MoffleConfig::effective_disc_radius() const {
  return disc_radius > 0.0 ? disc_radius : std::sqrt(static_cast<double>(d));
}

double MoffleConfig::beta() const {
  if (beta_override > 0.0) return beta_override;
  const double b2 = effective_disc_radius() * effective_disc_radius();
  const double k_pow = simplex ? std::pow(static_cast<double>(K), 2) : std::pow(static_cast<double>(K), 4);
  const double target = eta_min * eta_min / (128.0 * d * k_pow * b2);
  if (beta_condition(1.0) <= target) return 1.0;
  double lo = 1e-12, hi = 1.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (beta_condition(mid) <= target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return lo;
}

double MoffleConfig::kappa() const {
  if (kappa_override > 0.0) return kappa_override;
  const double k_pow = simplex ? std::pow(static_cast<double>(K), 2) : std::pow(static_cast<double>(K), 4);
  return 64.0 * d * k_pow * std::log(1.0 + 8.0 / beta()) / eta_min;
}

double MoffleConfig::eps_reg() const {
  if (eps_reg_override > 0.0) return eps_reg_override;
  const double lg = std::log(1.0 + 8.0 / beta());
  return std::pow(eta_min, 3) / (std::pow(static_cast<double>(d), 2) *
                                 std::pow(static_cast<double>(K), 9) * lg * lg);
}

double MoffleConfig::eps_apx() const {
  if (eps_apx_override > 0.0) return eps_apx_override;
  const double e = effective_eps();
  return e * e / (16.0 * std::pow(static_cast<double>(H), 4) * kappa() * K);
}

int MoffleConfig::max_sample_size() const {
  return std::max(std::max(n_phi_hat, n_ell), std::max(n_phi_bar, n_plan));
}

void MoffleConfig::validate() const {
  if (H < 1 || K < 1 || d < 1) throw InvalidArgument("config shapes");
  if (eta_min <= 0.0) throw InvalidArgument("config needs the exact eta_min of the environment");
  if (n_phi_hat < 1 || n_ell < 1 || n_phi_bar < 1 || n_plan < 1) {
    throw InvalidArgument("sample sizes must be >= 1");
  }
  if (beta() <= 0.0 || beta() > 1.0) throw InvalidArgument("beta out of (0, 1]");
}

MixturePolicy PolicyCover::data_policy(int level, int lag) const {
  const int base = level - lag - 1;
  if (base < 0) return uniform_mixture(level);
  return rho.at(base).with_extra(lag + 1);
}

MixturePolicy PolicyCover::latent_policy(int latent_level, int lag) const {
  const int base = latent_level - lag - 1;
  if (base < 0) return uniform_mixture(latent_level - 1);
  return rho.at(base).with_extra(lag);
}

namespace {

// Family of test functions built from next-level candidates for learning
// phi_hat at level h.
DiscriminatorFamily exploration_family(const FeatureClass& phis, int h, const MoffleConfig& cfg) {
  DiscriminatorFamily fam;
  fam.phi_next = &phis.level(h + 1);
  if (cfg.simplex) {
    fam.kind = DiscriminatorKind::SimplexCoord;
    fam.theta_radius = 0.0;
  } else {
    fam.kind = cfg.oracle == OracleMode::Eigen ? DiscriminatorKind::FUnclipped
                                               : DiscriminatorKind::FClipped;
    fam.theta_radius = cfg.effective_disc_radius();
  }
  fam.clip_hi = 1.0;
  return fam;
}

int learn_phi_hat(const FeatureClass& phis, int h, const TransitionDataset& data,
                  const MoffleConfig& cfg, OracleReport* report) {
  const DiscriminatorFamily fam = exploration_family(phis, h, cfg);
  const double l_sqrt_d = std::sqrt(static_cast<double>(cfg.d));
  if (!cfg.simplex && cfg.oracle == OracleMode::Eigen) {
    FloEigenOptions opt;
    opt.theta_radius = cfg.effective_disc_radius();
    opt.lambda = 1.0 / l_sqrt_d;
    return flo_eigen(phis.level(h), phis.level(h + 1), data, opt, report);
  }
  if (cfg.oracle == OracleMode::Greedy) {
    GreedyConfig gc;
    gc.eps_tol = cfg.oracle_eps_tol > 0.0 ? cfg.oracle_eps_tol : cfg.eps_reg();
    gc.L = 1.0;
    gc.d = cfg.d;
    gc.restarts = cfg.search_restarts;
    gc.ascent_steps = cfg.search_ascent_steps;
    gc.search_seed = cfg.seed ^ static_cast<std::uint64_t>(h);
    return greedy_select(phis.level(h), fam, data, gc, report);
  }
  FloOptions opt;
  opt.outer_radius = l_sqrt_d;
  opt.correction_radius = l_sqrt_d;
  opt.restarts = cfg.search_restarts;
  opt.ascent_steps = cfg.search_ascent_steps;
  opt.search_seed = cfg.seed ^ static_cast<std::uint64_t>(h);
  return flo_minmaxmin(phis.level(h), fam, data, opt, report);
}

int learn_phi_bar(const FeatureClass& phis, int h, const TransitionDataset& data,
                  const std::vector<RewardFunction>& rewards, const MoffleConfig& cfg,
                  OracleReport* report) {
  DiscriminatorFamily fam;
  fam.kind = DiscriminatorKind::GClass;
  fam.phi_next = &phis.level(h + 1);
  fam.rewards = &rewards;
  fam.clip_hi = static_cast<double>(cfg.H);
  const int dp = phis.at(h + 1, 0).d;
  fam.theta_radius = cfg.H * std::sqrt(static_cast<double>(dp));
  const double fit_radius = cfg.H * std::sqrt(static_cast<double>(cfg.d));
  // The ridge/eigen shortcut needs unclipped linear test functions, so the
  // reward-bearing family always goes through the search-based oracles.
  if (cfg.oracle == OracleMode::Greedy) {
    GreedyConfig gc;
    gc.eps_tol = cfg.oracle_eps_tol > 0.0 ? cfg.oracle_eps_tol : cfg.eps_apx();
    gc.L = static_cast<double>(cfg.H);
    gc.d = cfg.d;
    gc.restarts = cfg.search_restarts;
    gc.ascent_steps = cfg.search_ascent_steps;
    gc.search_seed = cfg.seed ^ (0x9E37ULL + h);
    return greedy_select(phis.level(h), fam, data, gc, report);
  }
  FloOptions opt;
  opt.outer_radius = fit_radius;
  opt.correction_radius = fit_radius;
  opt.restarts = cfg.search_restarts;
  opt.ascent_steps = cfg.search_ascent_steps;
  opt.search_seed = cfg.seed ^ (0x9E37ULL + h);
  return flo_minmaxmin(phis.level(h), fam, data, opt, report);
}

}  // namespace

ExploreResult explore(const LatentLowRankMDP& mdp, const FeatureClass& phis,
                      const MoffleConfig& cfg, const RngStream& rng) {
  cfg.validate();
  phis.validate();
  if (phis.num_levels() != mdp.H + 1) throw LevelMismatch("feature class must cover levels 0..H");

  ExploreResult out;
  out.data.reserve(mdp.H);
  const int n_max = cfg.max_sample_size();
  const double beta = cfg.beta();

  for (int h = 0; h < mdp.H; ++h) {
    const MixturePolicy data_pol = out.cover.data_policy(h, cfg.lag());
    out.data.push_back(
        collect_dataset(mdp, data_pol, h, n_max, rng.derive("collect").derive(h)));

    LevelArtifacts art;
    art.level = h;
    art.phi_hat = learn_phi_hat(phis, h, out.data[h].slice(cfg.n_phi_hat), cfg,
                                &art.phi_hat_report);

    // rho[h] is only ever consumed lag+1 levels later (by data_policy or
    // latent_policy); when that level is past the horizon there is nothing
    // to plan for and the uniform mixture stands in.
    if (h + cfg.lag() + 1 <= mdp.H) {
      std::vector<TransitionDataset> ell_slices;
      std::vector<const TransitionDataset*> ell_ptrs;
      ell_slices.reserve(h + 1);
      for (int l = 0; l <= h; ++l) ell_slices.push_back(out.data[l].slice(cfg.n_ell));
      for (int l = 0; l <= h; ++l) ell_ptrs.push_back(&ell_slices[l]);
      const PlannerWorkspace ws = PlannerWorkspace::build(ell_ptrs, phis, mdp);
      art.planner =
          elliptical_planner(ws, phis.at(h, art.phi_hat), h, beta, cfg.planner_t_max);
      out.cover.rho.push_back(art.planner.mixture);
    } else {
      art.planner.halted = true;
      out.cover.rho.push_back(uniform_mixture(h));
    }
    out.cover.artifacts.push_back(std::move(art));
  }
  return out;
}

MoffleResult moffle(const LatentLowRankMDP& mdp, const FeatureClass& phis,
                    const std::vector<RewardFunction>& rewards, const MoffleConfig& cfg,
                    const RngStream& rng) {
  if (rewards.empty()) throw EmptyClass("moffle needs a reward class");
  ExploreResult ex = explore(mdp, phis, cfg, rng);
  MoffleResult out;
  out.cover = std::move(ex.cover);
  out.data = std::move(ex.data);
  out.phi_bar.resize(mdp.H, -1);
  for (int h = 0; h < mdp.H; ++h) {
    out.phi_bar[h] = learn_phi_bar(phis, h, out.data[h].slice(cfg.n_phi_bar), rewards, cfg,
                                   &out.cover.artifacts[h].phi_bar_report);
    out.cover.artifacts[h].phi_bar = out.phi_bar[h];
  }
  return out;
}

PlanResult plan_downstream(const LatentLowRankMDP& mdp, const std::vector<TransitionDataset>& data,
                           const FeatureClass& phis, const RewardFunction& reward,
                           FqiVariant variant, const MoffleConfig& cfg,
                           const std::vector<int>* rep_index) {
  if (static_cast<int>(data.size()) < mdp.H) throw MissingLevelData("plan needs all levels");
  std::vector<TransitionDataset> slices;
  std::vector<const TransitionDataset*> ptrs;
  slices.reserve(mdp.H);
  for (int h = 0; h < mdp.H; ++h) slices.push_back(data[h].slice(cfg.n_plan));
  for (int h = 0; h < mdp.H; ++h) ptrs.push_back(&slices[h]);
  const PlannerWorkspace ws = PlannerWorkspace::build(ptrs, phis, mdp);
  const double radius = cfg.H * std::sqrt(static_cast<double>(cfg.d));

  const FqiResult res = fqi(ws, reward, variant, radius, mdp.H, rep_index);
  PlanResult out;
  out.policy = res.policy;
  out.v_hat = res.v_init;
  out.chosen_phi = res.chosen_phi;
  return out;
}

CoverReport verify_cover(const LatentLowRankMDP& mdp, const PolicyCover& cover,
                         const MoffleConfig& cfg) {
  if (static_cast<int>(cover.rho.size()) != mdp.H) throw ShapeMismatch("cover size vs horizon");
  CoverReport out;
  const double kappa = cfg.kappa();
  out.eta_over_kappa = cfg.eta_min / kappa;
  out.eta_over_2kappa = cfg.eta_min / (2.0 * kappa);
  out.kappa_cfg_k = kappa * cfg.K;

  out.min_latent_occ = 1.0;
  for (int l = 1; l <= mdp.H; ++l) {
    const MixturePolicy pol = cover.latent_policy(l, cfg.lag());
    Vector occ = exact_latent_occupancy(mdp, pol, l);
    out.min_latent_occ = std::min(out.min_latent_occ, occ.minCoeff());
    out.latent_occ.push_back(std::move(occ));
  }

  for (int h = 0; h < mdp.H; ++h) {
    const MixturePolicy pol = cover.data_policy(h, cfg.lag());
    const Matrix occ = exact_state_action_occupancy(mdp, pol, h);
    double worst = 0.0;
    for (int x = 0; x < mdp.states_at(h); ++x) {
      const double reachable = max_state_occupancy(mdp, h, x);
      for (int a = 0; a < mdp.K; ++a) {
        if (reachable <= 0.0) continue;
        const double denom = occ(x, a);
        worst = denom > 0.0 ? std::max(worst, reachable / denom)
                            : std::numeric_limits<double>::infinity();
      }
    }
    out.kappa_emp_k.push_back(worst);
  }
  out.coverage_ok = out.min_latent_occ >= out.eta_over_2kappa;
  return out;
}

}  // namespace moffle
