#pragma once

#include <string>
#include <vector>

#include "moffle/driver.hpp"
#include "moffle/features.hpp"
#include "moffle/mdp.hpp"

namespace moffle {

// %.17g, enough digits for a lossless double round trip.
std::string format_double(double v);

void save_env_json(const LatentLowRankMDP& mdp, const std::string& path);
LatentLowRankMDP load_env_json(const std::string& path);

void save_feature_map_json(const FeatureMap& f, const std::string& path);
FeatureMap load_feature_map_json(const std::string& path);

// Directory of per-(level, member) files plus an index.
void save_feature_class(const FeatureClass& phis, const std::string& dir);
FeatureClass load_feature_class(const std::string& dir);

void save_dataset_csv(const TransitionDataset& data, const std::string& path);
TransitionDataset load_dataset_csv(const std::string& path);

void save_rewards_json(const std::vector<RewardFunction>& rewards, const std::string& path);
std::vector<RewardFunction> load_rewards_json(const std::string& path);

void save_policy_json(const Policy& pi, const std::string& path);
Policy load_policy_json(const std::string& path);

void save_cover_json(const PolicyCover& cover, const std::string& path);
PolicyCover load_cover_json(const std::string& path);

void save_trace_csv(const std::vector<EllipticalTraceRow>& trace, const std::string& path);

void save_oracle_report_json(const OracleReport& report, const std::string& path);
void save_cover_report_json(const CoverReport& report, const std::string& path);

}  // namespace moffle
