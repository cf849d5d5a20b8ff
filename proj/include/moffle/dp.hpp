#pragma once

#include <vector>

#include "moffle/common.hpp"
#include "moffle/features.hpp"
#include "moffle/mdp.hpp"

namespace moffle {

// Exact occupancy P[x_h = x, a_h = a] under the policy; mixtures average their
// members (with uniform continuation past base_level).
Matrix exact_state_action_occupancy(const LatentLowRankMDP& mdp, const Policy& pi, int h);
Matrix exact_state_action_occupancy(const LatentLowRankMDP& mdp, const MixturePolicy& rho, int h);

Vector exact_state_occupancy(const LatentLowRankMDP& mdp, const Policy& pi, int h);
Vector exact_state_occupancy(const LatentLowRankMDP& mdp, const MixturePolicy& rho, int h);

// P[z_level = z] for level in 1..H (latent drawn on the transition into that level).
Vector exact_latent_occupancy(const LatentLowRankMDP& mdp, const Policy& pi, int level);
Vector exact_latent_occupancy(const LatentLowRankMDP& mdp, const MixturePolicy& rho, int level);

struct BellmanBackup {
  Matrix values;  // |X_h| x K: E[f(x_{h+1}) | x, a]
  Vector theta;   // nu[h] * f, so values(x, a) = <phi*_h(x, a), theta>
};
BellmanBackup exact_bellman_backup(const LatentLowRankMDP& mdp, int h, const Vector& f_next);

struct ValueIterationResult {
  Policy policy;  // deterministic, ties resolved to the lowest action id
  double optimal_value = 0.0;
  std::vector<Matrix> q;  // per level
  std::vector<Vector> v;  // per level, plus terminal zeros
};
ValueIterationResult value_iteration(const LatentLowRankMDP& mdp, const RewardFunction& reward);

// Optimal value when reward is paid only at `h_last` (table over X_{h_last} x A)
// and the episode stops there.
struct TerminalVIResult {
  Policy policy;  // levels 0..h_last
  double value = 0.0;
};
TerminalVIResult value_iteration_terminal(const LatentLowRankMDP& mdp, int h_last,
                                          const Matrix& reward);

double exact_policy_value(const LatentLowRankMDP& mdp, const Policy& pi,
                          const RewardFunction& reward);
double exact_policy_value(const LatentLowRankMDP& mdp, const MixturePolicy& rho,
                          const RewardFunction& reward);

// max over policies of P[z_{h+1} = z], for h in 0..H-1 (row h, column z).
Matrix reachability_table(const LatentLowRankMDP& mdp);
double min_reachability(const LatentLowRankMDP& mdp);  // eta_min

// max over policies of P[x_h = x] (a_h free, so this also bounds any (x, a) occupancy).
double max_state_occupancy(const LatentLowRankMDP& mdp, int h, int x);

}  // namespace moffle
