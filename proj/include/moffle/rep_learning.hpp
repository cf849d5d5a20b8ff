#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "moffle/design_cache.hpp"
#include "moffle/discriminators.hpp"
#include "moffle/features.hpp"

namespace moffle {

enum class OracleMode { MinMaxMin, Eigen, Greedy };

// The test-function family a candidate representation is scored against:
// finite in (next-level feature, reward), continuous in theta except for
// SimplexCoord, which enumerates coordinates and needs no search.
struct DiscriminatorFamily {
  DiscriminatorKind kind = DiscriminatorKind::FClipped;
  const std::vector<FeatureMap>* phi_next = nullptr;
  const std::vector<RewardFunction>* rewards = nullptr;  // GClass only
  double theta_radius = 0.0;
  double clip_hi = 1.0;

  void validate() const;
};

struct WitnessRecord {
  int iteration = 0;
  std::string phi_label;       // representation fitted at this iteration
  std::string phi_next_label;  // witness discriminator building blocks
  std::string reward_label;
  int coord = -1;
  Vector theta;
  double gap = 0.0;
};

struct OracleReport {
  int chosen_index = -1;
  std::string chosen_label;
  double objective = 0.0;
  int iterations = 0;
  bool exact_search = false;  // true when the max over the family is exact
  bool budget_exhausted = false;
  std::string termination;  // "one_shot" | "converged" | "cap"
  std::vector<WitnessRecord> witnesses;
  double wall_seconds = 0.0;
};

// Shared knobs for the heuristic search over theta in clipped families:
// `restarts` random starts on the radius sphere, each refined by
// `ascent_steps` sign-projected coordinate-ascent moves.
struct FloOptions {
  double outer_radius = 0.0;       // B of the variance-corrected outer minimum
  double correction_radius = 0.0;  // L sqrt(d) of the corrective inner minimum
  int restarts = 64;
  int ascent_steps = 200;
  std::uint64_t search_seed = 0;
};

// Variance-corrected min-max-min selection. Exact over finite families
// (SimplexCoord); a documented heuristic over theta otherwise.
int flo_minmaxmin(const std::vector<FeatureMap>& phis, const DiscriminatorFamily& family,
                  const TransitionDataset& data, const FloOptions& opt,
                  OracleReport* report = nullptr);

struct FloEigenOptions {
  double lambda = 0.0;        // ridge weight; 0 picks 1/theta_radius
  double theta_radius = 0.0;  // 0 picks sqrt(d') of the next-level features
};

// Ridge route: for each (phi, phi~, phi') triple the worst-case theta is the
// top eigenvector of the residual-difference quadratic form.
int flo_eigen(const std::vector<FeatureMap>& phis, const std::vector<FeatureMap>& phi_next,
              const TransitionDataset& data, const FloEigenOptions& opt,
              OracleReport* report = nullptr);

// One triple's objective from explicit design matrices (rows X_i = phi(x_i,a_i),
// Xnext_i = mean_a phi'(x'_i, a)); exposed for oracle cross-checks.
QuadMax flo_eigen_triple(const Matrix& X, const Matrix& Xtilde, const Matrix& Xnext, double lambda,
                         double theta_radius);

struct GreedyConfig {
  double eps_tol = 0.05;
  double L = 1.0;
  int d = 1;
  int restarts = 64;
  int ascent_steps = 200;
  std::uint64_t search_seed = 0;

  double eps0() const { return eps_tol / (52.0 * d * d); }
  double stop_threshold() const { return 24.0 * d * d * eps0() + eps0() * eps0(); }
  int t_max() const { return static_cast<int>(std::ceil(52.0 * L * L * d * d / eps_tol)); }
  double radius_at(int t) const { return L * std::sqrt(static_cast<double>(d) * t) / 2.0; }
  double final_radius() const {
    return std::sqrt(13.0 * L * L * L * L * static_cast<double>(d) * d * d / eps_tol);
  }
};

// Iterative greedy selection: alternate fitting all accumulated witnesses
// (per-column radius L sqrt(d)) with finding the next worst-case
// discriminator at radius radius_at(t), until the witness gap drops below
// stop_threshold() or t_max() is hit.
int greedy_select(const std::vector<FeatureMap>& phis, const DiscriminatorFamily& family,
                  const TransitionDataset& data, const GreedyConfig& cfg,
                  OracleReport* report = nullptr);

}  // namespace moffle
