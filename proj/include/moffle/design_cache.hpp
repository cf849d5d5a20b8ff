#pragma once

#include <vector>

#include "moffle/common.hpp"
#include "moffle/features.hpp"
#include "moffle/regression.hpp"

namespace moffle {

// Sufficient statistics for squared-loss regression of any target that is a
// function of the next state, against every candidate feature map at one
// level. Because states enumerate, a target is a per-next-state vector s and
//   X^T y / n = b_op * s,   y^T y / n = s^T m_y s,
// so fits cost O(d^2) regardless of sample count. Works for both empirical
// data (counts-based) and exact conditional expectations (occupancy-based),
// which is how the infinite-data planner mode reuses every solver unchanged.
struct DesignCache {
  int level = 0;
  int n = 0;  // sample count (0 for exact mode)
  int num_next = 0;
  Vector next_counts;  // per next state: empirical counts, or marginal weights in exact mode
  Matrix m_y;          // num_next x num_next

  struct PerPhi {
    Matrix gram;  // d x d: X^T X / n  (or sum_w phi phi^T)
    Matrix b_op;  // d x num_next: maps per-state targets to X^T y / n
  };
  std::vector<PerPhi> per_phi;

  Vector b(int phi_idx, const Vector& s) const { return per_phi.at(phi_idx).b_op * s; }
  double target_sq(const Vector& s) const { return s.dot(m_y * s); }
  double loss_at(int phi_idx, const Vector& w, const Vector& s) const {
    const PerPhi& p = per_phi.at(phi_idx);
    return w.dot(p.gram * w) - 2.0 * w.dot(p.b_op * s) + target_sq(s);
  }
  LsqResult fit(int phi_idx, const Vector& s, double radius) const {
    return constrained_lsq_gram(per_phi.at(phi_idx).gram, b(phi_idx, s), radius);
  }
};

DesignCache build_design_cache(const TransitionDataset& data,
                               const std::vector<FeatureMap>& phis, int num_next_states);

// Exact-population cache: rows are all (x, a) of `level` weighted by
// `weights` (nonnegative, summing to 1); targets become exact one-step
// conditional expectations under the environment.
DesignCache build_exact_design_cache(const LatentLowRankMDP& mdp, int level,
                                     const std::vector<FeatureMap>& phis, const Matrix& weights);

}  // namespace moffle
