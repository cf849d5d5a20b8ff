#pragma once

#include <string>
#include <vector>

#include "moffle/common.hpp"
#include "moffle/mdp.hpp"

namespace moffle {

// Dense per-level feature table over (state, action), rows phi(x, a) with
// ||phi(x, a)||_2 <= 1.
struct FeatureMap {
  int level = 0;
  int d = 0;
  int num_states = 0;
  int num_actions = 0;
  Matrix values;  // (num_states * num_actions) x d
  std::string label;

  Vector row(int x, int a) const { return values.row(sa_index(x, a, num_actions)).transpose(); }
  // mean over actions of phi(x, a)
  Vector action_avg(int x) const;
  Matrix action_avg_table() const;  // num_states x d
  void validate() const;
};

FeatureMap feature_map_from_psi(const LatentLowRankMDP& mdp, int h, const std::string& label);

// Candidate feature maps per level 0..H. Level H entries act only as
// discriminator building blocks over terminal states. star_index records,
// per level, which candidate is the canonical one (-1 when none is).
struct FeatureClass {
  std::vector<std::vector<FeatureMap>> levels;
  std::vector<int> star_index;

  int num_levels() const { return static_cast<int>(levels.size()); }
  int count(int h) const;
  const FeatureMap& at(int h, int i) const;
  const std::vector<FeatureMap>& level(int h) const;
  void validate() const;
};

struct RewardFunction {
  std::vector<Matrix> tables;  // tables[h]: |X_h| x K, values in [0, 1]
  std::string label;

  int levels() const { return static_cast<int>(tables.size()); }
  // Levels past the last table (e.g. terminal states) pay zero.
  double at(int h, int x, int a) const;
  void validate() const;
};

RewardFunction zero_reward(const LatentLowRankMDP& mdp);
// Zero everywhere except `table` at `level`.
RewardFunction terminal_reward(const LatentLowRankMDP& mdp, int level, Matrix table,
                               const std::string& label);

}  // namespace moffle
