#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "moffle/dp.hpp"
#include "moffle/planners.hpp"
#include "moffle/rep_learning.hpp"

namespace moffle {

// Primitive quantities plus desk-scale knobs. Derived values are recomputed
// from primitives unless an override is set; overrides are reported back by
// the run artifacts so no silent substitution happens.
struct MoffleConfig {
  // environment primitives
  int H = 0;
  int K = 0;
  int d = 0;
  double eta_min = 0.0;

  double eps = 0.0;    // downstream accuracy target; 0 picks 0.15 * H
  double delta = 0.05;  // failure probability, documentation only at this scale
  double disc_radius = 0.0;  // B of the F family; 0 picks sqrt(d)

  double beta_override = 0.0;
  double kappa_override = 0.0;
  double eps_reg_override = 0.0;
  double eps_apx_override = 0.0;
  double oracle_eps_tol = 0.0;  // greedy tolerance override for desk scale

  int n_phi_hat = 10000;
  int n_ell = 10000;
  int n_phi_bar = 10000;
  int n_plan = 10000;

  OracleMode oracle = OracleMode::Eigen;
  bool simplex = false;
  int planner_lag = -1;  // -1 picks 2 (standard) or 1 (simplex)
  int planner_t_max = 0;
  int search_restarts = 64;
  int search_ascent_steps = 200;
  std::uint64_t seed = 0;

  double effective_eps() const { return eps > 0.0 ? eps : 0.15 * H; }
  double effective_disc_radius() const;
  double beta() const;     // largest b in (0,1] with b log(1+8/b) <= eta^2/(128 d K^4 B^2)
  double kappa() const;    // 64 d K^4 log(1+8/beta)/eta (K^2 in simplex mode)
  double eps_reg() const;  // eta^3 / (d^2 K^9 log^2(1+8/beta))
  double eps_apx() const;  // eps^2 / (16 H^4 kappa K)
  int lag() const { return planner_lag >= 0 ? planner_lag : (simplex ? 1 : 2); }
  int max_sample_size() const;
  void validate() const;
};

struct LevelArtifacts {
  int level = 0;
  int phi_hat = -1;
  OracleReport phi_hat_report;
  int phi_bar = -1;
  OracleReport phi_bar_report;
  EllipticalResult planner;
};

// rho[h] mixes the planner iterates for level h; the dataset for level h is
// always drawn from rho[h - lag - 1] extended by lag + 1 uniform actions.
struct PolicyCover {
  std::vector<MixturePolicy> rho;
  std::vector<LevelArtifacts> artifacts;

  MixturePolicy data_policy(int level, int lag) const;
  // Mixture whose latent occupancy at `latent_level` (1..H) the coverage
  // guarantee speaks about: rho[latent_level - lag - 1] plus lag uniform
  // actions, just enough to pin down the latent.
  MixturePolicy latent_policy(int latent_level, int lag) const;
};

struct ExploreResult {
  PolicyCover cover;
  std::vector<TransitionDataset> data;  // unified per level, size max_sample_size()
};

ExploreResult explore(const LatentLowRankMDP& mdp, const FeatureClass& phis,
                      const MoffleConfig& cfg, const RngStream& rng);

struct MoffleResult {
  PolicyCover cover;
  std::vector<TransitionDataset> data;
  std::vector<int> phi_bar;  // per level, index into the class
};

MoffleResult moffle(const LatentLowRankMDP& mdp, const FeatureClass& phis,
                    const std::vector<RewardFunction>& rewards, const MoffleConfig& cfg,
                    const RngStream& rng);

struct PlanResult {
  Policy policy;
  double v_hat = 0.0;
  std::vector<int> chosen_phi;
};

// Downstream FQI on the n_plan slices; FullClass enumerates features,
// Representation uses the supplied per-level indices.
PlanResult plan_downstream(const LatentLowRankMDP& mdp, const std::vector<TransitionDataset>& data,
                           const FeatureClass& phis, const RewardFunction& reward,
                           FqiVariant variant, const MoffleConfig& cfg,
                           const std::vector<int>* rep_index = nullptr);

struct CoverReport {
  std::vector<Vector> latent_occ;  // per latent level 1..H under latent_policy
  double min_latent_occ = 0.0;
  double eta_over_kappa = 0.0;
  double eta_over_2kappa = 0.0;
  std::vector<double> kappa_emp_k;  // per level: max (x,a) occupancy ratio vs data policy
  double kappa_cfg_k = 0.0;
  bool coverage_ok = false;
};

// Exact-DP audit of the cover against the guarantee thresholds.
CoverReport verify_cover(const LatentLowRankMDP& mdp, const PolicyCover& cover,
                         const MoffleConfig& cfg);

}  // namespace moffle
