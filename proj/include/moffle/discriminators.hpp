#pragma once

#include <vector>

#include "moffle/common.hpp"
#include "moffle/features.hpp"

namespace moffle {

enum class DiscriminatorKind { FClipped, FUnclipped, SimplexCoord, GClass };

// Scalar test function over next-level states, built from a next-level feature
// map. The four kinds:
//   FClipped     clip_[0,1]( mean_a <phi'(x', a), theta> )
//   FUnclipped   mean_a <phi'(x', a), theta>
//   SimplexCoord mean_a phi'(x', a)[coord]
//   GClass       clip_[0,clip_hi]( max_a ( R(level', x', a) + <phi'(x', a), theta> ) )
struct Discriminator {
  DiscriminatorKind kind = DiscriminatorKind::FClipped;
  const FeatureMap* phi_next = nullptr;
  Vector theta;
  int coord = -1;
  const RewardFunction* reward = nullptr;  // GClass only
  double clip_hi = 1.0;

  void validate() const;
};

double eval_discriminator(const Discriminator& v, int x_next);

// Values for every next-level state at once (cheap because states enumerate).
Vector eval_discriminator_table(const Discriminator& v);

// y_i = v(x'_i) over the dataset rows.
Vector eval_targets(const Discriminator& v, const TransitionDataset& data);

// Q-value shape shared by the planners: reward plus a linear part in phi,
// optionally clipped before the reward is added.
struct QFunction {
  const FeatureMap* phi = nullptr;
  Vector w;
  const RewardFunction* reward = nullptr;  // null means zero reward
  bool clip_linear = false;
  double clip_lo = 0.0;
  double clip_hi = 1.0;

  double eval(int x, int a) const;
  Matrix table() const;  // num_states x num_actions
};

// Greedy deterministic policy from per-level Q tables; ties pick the lowest id.
Policy greedy_policy_from_q(const std::vector<Matrix>& q_tables, int num_actions);

}  // namespace moffle
