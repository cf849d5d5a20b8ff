#pragma once

#include <vector>

#include "moffle/design_cache.hpp"
#include "moffle/discriminators.hpp"
#include "moffle/features.hpp"

namespace moffle {

// Shared per-level regression statistics plus environment shapes, built once
// per (dataset set, feature class) and reused across every FQI/FQE call.
struct PlannerWorkspace {
  const FeatureClass* phis = nullptr;
  std::vector<DesignCache> cache;  // per level that has data (0..levels-1)
  std::vector<int> num_states;     // levels 0..H
  int K = 0;
  int H = 0;
  Vector init;

  int data_levels() const { return static_cast<int>(cache.size()); }

  // data[h] must carry level h; levels 0..data.size()-1.
  static PlannerWorkspace build(const std::vector<const TransitionDataset*>& data,
                                const FeatureClass& phis, const LatentLowRankMDP& mdp);
  // Infinite-data mode: every (x, a) weighted uniformly, targets replaced by
  // exact conditional expectations.
  static PlannerWorkspace build_exact(const LatentLowRankMDP& mdp, const FeatureClass& phis);
};

// Q-function class per variant:
//   FullClass       R_h + <phi, w>, phi enumerated, ||w|| <= radius, V clipped to [0, H]
//   Representation  R_h + clip_[0,H](<phi_rep, w>), ||w|| <= radius, V clipped to [0, H]
//   Elliptical      R_h + <phi, w>, phi enumerated, ||w|| <= radius, V clipped to [0, 1]
enum class FqiVariant { FullClass, Representation, Elliptical };

struct FqiResult {
  Policy policy;
  std::vector<Matrix> q_tables;  // per level 0..horizon-1
  std::vector<Vector> v_tables;  // per level 0..horizon (terminal zeros)
  std::vector<int> chosen_phi;   // per level
  double v_init = 0.0;           // init-weighted V_0 estimate
};

FqiResult fqi(const PlannerWorkspace& ws, const RewardFunction& reward, FqiVariant variant,
              double radius, int horizon, const std::vector<int>* rep_index = nullptr);

struct FqeResult {
  double value = 0.0;            // init-weighted clipped V_0
  std::vector<Vector> v_tables;  // per level
  std::vector<int> chosen_phi;
};

// Off-policy evaluation: backward squared-loss fitting over all candidate
// features at radius sqrt(d), values clipped to [0, 1].
FqeResult fqe(const PlannerWorkspace& ws, const RewardFunction& reward, const Policy& pi,
              int horizon, double radius = 0.0);

struct EllipticalTraceRow {
  int t = 0;
  double v_hat = 0.0;
  double trace_gamma = 0.0;
  double lambda_min = 0.0;
  int floored = 0;  // eigenvalues raised to 1 when updating Gamma
};

struct EllipticalResult {
  MixturePolicy mixture;  // uniform over the iterates, base_level = h_last
  Matrix gamma;
  std::vector<EllipticalTraceRow> trace;
  std::vector<Matrix> iteration_rewards;  // terminal reward table per iteration
  bool halted = false;                    // v_hat <= 3 beta / 4 reached
};

int elliptical_default_t_max(int d, double beta);

// Reward-free exploratory planning at level h_last: repeatedly plan for the
// elliptical bonus ||phi_hat||^2 w.r.t. the running inverse covariance, halt
// once the estimated bonus value drops to 3 beta / 4.
EllipticalResult elliptical_planner(const PlannerWorkspace& ws, const FeatureMap& phi_hat,
                                    int h_last, double beta, int t_max = 0);

}  // namespace moffle
