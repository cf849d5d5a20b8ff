#pragma once

#include <string>
#include <vector>

#include "moffle/features.hpp"
#include "moffle/mdp.hpp"
#include "moffle/rng.hpp"

namespace moffle {

struct EnvParams {
  int H = 3;
  int K = 2;
  int d = 3;
  int states_per_level = 12;
  std::vector<int> num_states;  // optional; overrides states_per_level
  double eta_floor = 0.05;
  double concentration_psi = 0.5;
  double concentration_nu = 0.5;
  bool uniform_psi = false;  // mixing rows all 1/d (reachability exactly 1/d)
  int max_attempts = 1000;
};

// Rejection-samples latent dynamics until exact minimum reachability clears
// eta_floor; throws GenerationFailed past max_attempts.
LatentLowRankMDP generate_env(const EnvParams& params, const RngStream& rng);

struct FeatureGenParams {
  int decoy_count = 3;
  // Cycled over decoys: "permute" (coordinate permutation of the canonical
  // map), "simplex" (fresh row-normalized random rows), "noise" (canonical
  // rows remixed with Dirichlet noise).
  std::vector<std::string> kinds = {"permute", "simplex", "noise"};
  double noise_weight = 0.35;
  double min_linf_gap = 0.05;  // every decoy must differ from phi* by this much
  int terminal_count = 0;      // members at level H; 0 picks decoy_count + 1
};

// Candidate class per level: phi* first (star_index 0) plus decoys; level H
// holds random simplex members only (star_index -1).
FeatureClass generate_feature_class(const LatentLowRankMDP& mdp, const FeatureGenParams& params,
                                    const RngStream& rng);

std::vector<RewardFunction> generate_reward_class(const LatentLowRankMDP& mdp, int count,
                                                  const RngStream& rng);

}  // namespace moffle
