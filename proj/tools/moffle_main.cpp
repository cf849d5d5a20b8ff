#include <chrono>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "moffle/dp.hpp"
#include "moffle/driver.hpp"
#include "moffle/errors.hpp"
#include "moffle/generators.hpp"
#include "moffle/harness.hpp"
#include "moffle/io.hpp"
#include "moffle/verification.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace moffle;

namespace {

constexpr const char* kVersion = "0.1.0";

struct Stage {
  RunConfig cfg;
  std::string out;
  RngStream root{0};

  fs::path path(const std::string& rel) const { return fs::path(out) / rel; }

  LatentLowRankMDP env() const {
    if (fs::exists(path("env.json"))) return load_env_json(path("env.json").string());
    if (cfg.has("env.load")) return load_env_json(cfg.get_str("env.load", ""));
    LatentLowRankMDP mdp = generate_env(cfg.env_params(), root.derive("env"));
    save_env_json(mdp, path("env.json").string());
    return mdp;
  }

  FeatureClass features(const LatentLowRankMDP& mdp) const {
    if (fs::exists(path("features"))) return load_feature_class(path("features").string());
    FeatureClass phis = generate_feature_class(mdp, cfg.feature_params(), root.derive("features"));
    save_feature_class(phis, path("features").string());
    return phis;
  }

  std::vector<RewardFunction> rewards(const LatentLowRankMDP& mdp) const {
    if (fs::exists(path("rewards.json"))) return load_rewards_json(path("rewards.json").string());
    auto r = generate_reward_class(mdp, cfg.get_int("rewards.count", 3), root.derive("rewards"));
    save_rewards_json(r, path("rewards.json").string());
    return r;
  }

  bool have_datasets(const LatentLowRankMDP& mdp) const {
    for (int h = 0; h < mdp.H; ++h) {
      if (!fs::exists(path("datasets/level" + std::to_string(h) + ".csv"))) return false;
    }
    return true;
  }

  std::vector<TransitionDataset> datasets(const LatentLowRankMDP& mdp) const {
    std::vector<TransitionDataset> out_data;
    for (int h = 0; h < mdp.H; ++h) {
      out_data.push_back(
          load_dataset_csv(path("datasets/level" + std::to_string(h) + ".csv").string()));
    }
    return out_data;
  }

  void save_explore(const LatentLowRankMDP& mdp, const PolicyCover& cover,
                    const std::vector<TransitionDataset>& data) const {
    fs::create_directories(path("datasets"));
    fs::create_directories(path("reports"));
    for (int h = 0; h < mdp.H; ++h) {
      save_dataset_csv(data[h], path("datasets/level" + std::to_string(h) + ".csv").string());
      save_oracle_report_json(cover.artifacts[h].phi_hat_report,
                              path("reports/phi_hat_h" + std::to_string(h) + ".json").string());
      save_trace_csv(cover.artifacts[h].planner.trace,
                     path("reports/trace_level" + std::to_string(h) + ".csv").string());
    }
    save_cover_json(cover, path("cover.json").string());
  }
};

int cmd_gen_env(const Stage& st) {
  const LatentLowRankMDP mdp = generate_env(st.cfg.env_params(), st.root.derive("env"));
  save_env_json(mdp, st.path("env.json").string());
  std::printf("env.json written: H=%d K=%d d=%d eta_min=%s\n", mdp.H, mdp.K, mdp.d,
              format_double(min_reachability(mdp)).c_str());
  return 0;
}

int cmd_gen_features(const Stage& st) {
  const LatentLowRankMDP mdp = st.env();
  const FeatureClass phis =
      generate_feature_class(mdp, st.cfg.feature_params(), st.root.derive("features"));
  save_feature_class(phis, st.path("features").string());
  std::printf("features/ written: %d levels, %d members at level 0\n", phis.num_levels(),
              phis.count(0));
  return 0;
}

int cmd_explore(const Stage& st) {
  const LatentLowRankMDP mdp = st.env();
  const FeatureClass phis = st.features(mdp);
  const ExploreResult res = explore(mdp, phis, st.cfg.moffle_config(mdp), st.root.derive("moffle"));
  st.save_explore(mdp, res.cover, res.data);
  std::printf("cover.json + datasets/ written for %d levels\n", mdp.H);
  return 0;
}

int cmd_learn(const Stage& st) {
  const LatentLowRankMDP mdp = st.env();
  const FeatureClass phis = st.features(mdp);
  const std::vector<RewardFunction> rewards = st.rewards(mdp);
  const MoffleResult res =
      moffle::moffle(mdp, phis, rewards, st.cfg.moffle_config(mdp), st.root.derive("moffle"));
  st.save_explore(mdp, res.cover, res.data);
  json bar = json::array();
  for (int h = 0; h < mdp.H; ++h) {
    save_oracle_report_json(res.cover.artifacts[h].phi_bar_report,
                            st.path("reports/phi_bar_h" + std::to_string(h) + ".json").string());
    bar.push_back(res.phi_bar[h]);
  }
  std::ofstream outf(st.path("phi_bar.json"));
  outf << json{{"phi_bar", bar}}.dump(2) << '\n';
  std::printf("explored and learned representations for %d levels\n", mdp.H);
  return 0;
}

int cmd_plan(const Stage& st) {
  const LatentLowRankMDP mdp = st.env();
  const FeatureClass phis = st.features(mdp);
  const std::vector<RewardFunction> rewards = st.rewards(mdp);
  const MoffleConfig mcfg = st.cfg.moffle_config(mdp);

  std::vector<TransitionDataset> data;
  if (st.have_datasets(mdp)) {
    data = st.datasets(mdp);
  } else {
    const ExploreResult res = explore(mdp, phis, mcfg, st.root.derive("moffle"));
    st.save_explore(mdp, res.cover, res.data);
    data = res.data;
  }

  const std::string variant_name = st.cfg.get_str("plan.variant", "full_class");
  FqiVariant variant = FqiVariant::FullClass;
  std::vector<int> rep;
  if (variant_name == "representation") {
    variant = FqiVariant::Representation;
    if (!fs::exists(st.path("phi_bar.json"))) {
      throw InvalidArgument("plan.variant=representation needs phi_bar.json (run learn first)");
    }
    std::ifstream inf(st.path("phi_bar.json"));
    json j;
    inf >> j;
    for (const auto& v : j.at("phi_bar")) rep.push_back(v.get<int>());
  } else if (variant_name != "full_class") {
    throw InvalidArgument("unknown plan.variant " + variant_name);
  }

  json report;
  report["variant"] = variant_name;
  json per_reward = json::array();
  for (const auto& reward : rewards) {
    const PlanResult plan = plan_downstream(mdp, data, phis, reward, variant, mcfg,
                                            rep.empty() ? nullptr : &rep);
    const double v_star = value_iteration(mdp, reward).optimal_value;
    const double v_pi = exact_policy_value(mdp, plan.policy, reward);
    save_policy_json(plan.policy, st.path("policy_" + reward.label + ".json").string());
    per_reward.push_back({{"reward", reward.label},
                          {"v_star", v_star},
                          {"v_policy", v_pi},
                          {"gap", v_star - v_pi},
                          {"v_fqi", plan.v_hat}});
    std::printf("%s: v*=%s v_pi=%s gap=%s\n", reward.label.c_str(),
                format_double(v_star).c_str(), format_double(v_pi).c_str(),
                format_double(v_star - v_pi).c_str());
  }
  report["rewards"] = per_reward;
  std::ofstream outf(st.path("plan_report.json"));
  outf << report.dump(2) << '\n';
  return 0;
}

int cmd_eval(const Stage& st) {
  const LatentLowRankMDP mdp = st.env();
  const std::string policy_path = st.cfg.get_str("eval.policy", "");
  if (policy_path.empty()) throw InvalidArgument("eval needs eval.policy=<path>");
  const Policy pi = load_policy_json(policy_path);
  const std::vector<RewardFunction> rewards = st.rewards(mdp);
  json per_reward = json::array();
  for (const auto& reward : rewards) {
    const double v = exact_policy_value(mdp, pi, reward);
    per_reward.push_back({{"reward", reward.label}, {"value", v}});
    std::printf("%s: value=%s\n", reward.label.c_str(), format_double(v).c_str());
  }
  std::ofstream outf(st.path("eval.json"));
  outf << json{{"policy", policy_path}, {"values", per_reward}}.dump(2) << '\n';
  return 0;
}

int cmd_verify(const Stage& st) {
  const auto results = run_acceptance((fs::path(st.out) / "acceptance").string(), true);
  bool all = true;
  for (const auto& r : results) all = all && r.pass;
  json j = json::array();
  for (const auto& r : results) {
    j.push_back({{"id", r.id},
                 {"name", r.name},
                 {"pass", r.pass},
                 {"seconds", r.seconds},
                 {"detail", r.detail}});
  }
  std::ofstream outf(st.path("verify_report.json"));
  outf << j.dump(2) << '\n';
  return all ? 0 : 1;
}

int cmd_e2e(const Stage& st) {
  const auto start = std::chrono::steady_clock::now();
  const E2eSummary summary = run_e2e(st.cfg, st.out);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  json report;
  report["version"] = kVersion;
  report["seed"] = st.cfg.get_u64("seed", 0);
  report["wall_seconds"] = wall;
  report["eta_min"] = summary.eta_min;
  report["beta"] = summary.beta;
  report["kappa"] = summary.kappa;
  report["coverage_ok"] = summary.cover_report.coverage_ok;
  report["min_latent_occ"] = summary.cover_report.min_latent_occ;
  json rewards = json::array();
  for (size_t r = 0; r < summary.reward_gap.size(); ++r) {
    rewards.push_back({{"v_star", summary.reward_v_star[r]},
                       {"v_policy", summary.reward_v_hat[r]},
                       {"gap", summary.reward_gap[r]}});
  }
  report["rewards"] = rewards;
  report["phi_hat"] = summary.phi_hat;
  report["phi_bar"] = summary.phi_bar;
  std::ofstream outf(st.path("run_report.json"));
  outf << report.dump(2) << '\n';

  std::printf("e2e done in %.1fs: coverage_ok=%d", wall, summary.cover_report.coverage_ok ? 1 : 0);
  for (double g : summary.reward_gap) std::printf(" gap=%s", format_double(g).c_str());
  std::printf("\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MOFFLE: representation learning and reward-free exploration on low-rank MDPs"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "run";
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::vector<std::string> overrides;

  app.add_option("--config", config_path, "key=value config file");
  app.add_option("--out", out_dir, "run directory");
  app.add_option("--seed", seed, "master seed (overrides config)")->each([&](const std::string&) {
    seed_set = true;
  });
  app.add_option("--override", overrides, "config override key=value (repeatable)");

  const std::vector<std::pair<std::string, int (*)(const Stage&)>> commands = {
      {"gen-env", cmd_gen_env}, {"gen-features", cmd_gen_features}, {"explore", cmd_explore},
      {"learn", cmd_learn},     {"plan", cmd_plan},                 {"eval", cmd_eval},
      {"verify", cmd_verify},   {"e2e", cmd_e2e},
  };
  for (const auto& [name, fn] : commands) {
    app.add_subcommand(name)->fallthrough();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    Stage st;
    if (!config_path.empty()) st.cfg = RunConfig::from_file(config_path);
    for (const auto& kv : overrides) st.cfg.apply_override(kv);
    if (seed_set) st.cfg.values["seed"] = std::to_string(seed);
    st.out = out_dir;
    st.root = RngStream(st.cfg.get_u64("seed", 0));
    fs::create_directories(st.out);

    for (const auto& [name, fn] : commands) {
      if (app.got_subcommand(name)) return fn(st);
    }
    std::fprintf(stderr, "no subcommand\n");
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
