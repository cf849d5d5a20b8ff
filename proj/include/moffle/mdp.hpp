#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "moffle/common.hpp"
#include "moffle/rng.hpp"

namespace moffle {

// Finite-horizon layered MDP whose transitions factor through a latent set:
//   T_h(x' | x, a) = sum_z psi[h](z | x, a) * nu[h](x' | z).
// Rows of psi (indexed by flattened (x, a)) and of nu (indexed by z) are
// probability vectors; psi rows double as the canonical feature phi*_h(x, a)
// and nu columns as mu*_h(x').
struct LatentLowRankMDP {
  int H = 0;  // levels with actions: 0..H-1; states exist at levels 0..H
  int K = 0;
  int d = 0;  // latent set size per level boundary
  std::vector<int> num_states;  // size H+1
  std::vector<Matrix> psi;      // psi[h]: (num_states[h]*K) x d
  std::vector<Matrix> nu;       // nu[h]: d x num_states[h+1]
  Vector init;                  // distribution over X_0
  std::vector<Matrix> trans;    // derived: psi[h] * nu[h]

  int states_at(int level) const { return num_states.at(level); }
  const Matrix& phi_star(int h) const { return psi.at(h); }
  Vector phi_star_row(int h, int x, int a) const {
    return psi.at(h).row(sa_index(x, a, K)).transpose();
  }
  Vector mu_star(int h, int x_next) const { return nu.at(h).col(x_next); }
  Vector trans_row(int h, int x, int a) const {
    return trans.at(h).row(sa_index(x, a, K)).transpose();
  }
};

LatentLowRankMDP build_from_latent(int H, int K, int d, std::vector<int> num_states,
                                   std::vector<Matrix> psi, std::vector<Matrix> nu, Vector init);

// Per-level action rule; may cover fewer levels than the environment horizon.
class Policy {
 public:
  Policy() = default;

  static Policy deterministic(std::vector<IntVector> actions, int num_actions);
  static Policy stochastic(std::vector<Matrix> probs);
  static Policy uniform(const LatentLowRankMDP& mdp, int levels = -1);

  int levels() const { return static_cast<int>(probs_.size()); }
  int num_actions() const { return num_actions_; }
  bool is_deterministic() const { return deterministic_; }

  const Matrix& probs(int h) const;
  Vector action_probs(int h, int x) const;
  int action(int h, int x) const;  // deterministic policies only
  int sample_action(int h, int x, RngStream& rng) const;

 private:
  std::vector<Matrix> probs_;
  std::vector<IntVector> actions_;
  bool deterministic_ = false;
  int num_actions_ = 0;
};

// Uniform-over-members mixture, each member followed for a whole episode.
// base_level j is the last level the member policies decide (j < 0 means none);
// extra_uniform i appends uniform actions, so actions through level j+i are
// defined and the last one is a_{j+i}.
struct MixturePolicy {
  std::vector<Policy> members;
  int base_level = -1;
  int extra_uniform = 0;

  int last_level() const { return base_level + extra_uniform; }
  MixturePolicy with_extra(int i) const;
  void validate() const;
  bool pure_uniform() const { return members.empty(); }
};

MixturePolicy uniform_mixture(int levels_covered);  // pure uniform, last action a_{levels_covered}

struct Trajectory {
  std::vector<int> states;   // x_0..x_L
  std::vector<int> actions;  // a_0..a_{L-1}
  std::vector<int> latents;  // z_1..z_L, the intermediate draw of each transition
};

// Runs `levels` transitions (default mdp.H). Two-stage sampling: z ~ psi, x' ~ nu.
Trajectory sample_episode(const LatentLowRankMDP& mdp, const Policy& pi, RngStream& rng,
                          int levels = -1);
Trajectory sample_episode(const LatentLowRankMDP& mdp, const MixturePolicy& rho, RngStream& rng,
                          int levels = -1);

struct TransitionDataset {
  int level = 0;
  std::vector<std::array<int, 3>> rows;  // (x, a, x_next) at `level`
  std::string provenance;
  std::uint64_t seed = 0;

  int size() const { return static_cast<int>(rows.size()); }
  TransitionDataset slice(int n) const;
};

// One fresh episode per tuple; episode i uses rng.derive(i).
TransitionDataset collect_dataset(const LatentLowRankMDP& mdp, const Policy& pi, int level, int n,
                                  const RngStream& rng);
TransitionDataset collect_dataset(const LatentLowRankMDP& mdp, const MixturePolicy& rho, int level,
                                  int n, const RngStream& rng);

}  // namespace moffle
