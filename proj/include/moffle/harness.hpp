#pragma once

#include <map>
#include <string>
#include <vector>

#include "moffle/driver.hpp"
#include "moffle/generators.hpp"

namespace moffle {

// Flat key=value configuration; '#' starts a comment. Precedence:
// command-line overrides > file > defaults.
struct RunConfig {
  std::map<std::string, std::string> values;

  static RunConfig from_file(const std::string& path);
  void apply_override(const std::string& key_equals_value);

  bool has(const std::string& key) const { return values.count(key) > 0; }
  std::string get_str(const std::string& key, const std::string& fallback) const;
  int get_int(const std::string& key, int fallback) const;
  double get_double(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;

  EnvParams env_params() const;
  FeatureGenParams feature_params() const;
  // eta_min must be supplied once the environment is known.
  MoffleConfig moffle_config(const LatentLowRankMDP& mdp) const;
};

struct E2eSummary {
  CoverReport cover_report;
  std::vector<double> reward_v_star;
  std::vector<double> reward_v_hat;   // exact value of the planned policy
  std::vector<double> reward_gap;     // v_star - v_hat
  double eta_min = 0.0;
  double kappa = 0.0;
  double beta = 0.0;
  std::vector<int> phi_hat;  // chosen representation per level
  std::vector<int> phi_bar;
};

// Full pipeline: generate (or load) env + features + rewards, run moffle,
// plan for every reward, audit the cover, and write the run directory
// (env.json, features/, datasets/, cover.json, reports/, metrics.csv).
E2eSummary run_e2e(const RunConfig& cfg, const std::string& out_dir);

// Writes metrics.csv content for determinism comparisons.
std::string metrics_csv(const E2eSummary& s);

}  // namespace moffle
