#include "moffle/harness.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "moffle/dp.hpp"
#include "moffle/errors.hpp"
#include "moffle/io.hpp"

namespace moffle {

namespace fs = std::filesystem;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

RunConfig RunConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path);
  RunConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw IoError("config line " + std::to_string(lineno) + " is not key=value");
    }
    cfg.values[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return cfg;
}

void RunConfig::apply_override(const std::string& kv) {
  const auto eq = kv.find('=');
  if (eq == std::string::npos) throw InvalidArgument("override must be key=value: " + kv);
  values[trim(kv.substr(0, eq))] = trim(kv.substr(eq + 1));
}

std::string RunConfig::get_str(const std::string& key, const std::string& fallback) const {
  const auto it = values.find(key);
  return it == values.end() ? fallback : it->second;
}

int RunConfig::get_int(const std::string& key, int fallback) const {
  const auto it = values.find(key);
  if (it == values.end()) return fallback;
  try {
    return std::stoi(it->second);
  } catch (const std::exception&) {
    throw InvalidArgument("config key " + key + " is not an integer: " + it->second);
  }
}

double RunConfig::get_double(const std::string& key, double fallback) const {
  const auto it = values.find(key);
  if (it == values.end()) return fallback;
  try {
    return std::stod(it->second);
  } catch (const std::exception&) {
    throw InvalidArgument("config key " + key + " is not a number: " + it->second);
  }
}

bool RunConfig::get_bool(const std::string& key, bool fallback) const {
  const auto it = values.find(key);
  if (it == values.end()) return fallback;
  if (it->second == "true" || it->second == "1") return true;
  if (it->second == "false" || it->second == "0") return false;
  throw InvalidArgument("config key " + key + " is not a bool: " + it->second);
}

std::uint64_t RunConfig::get_u64(const std::string& key, std::uint64_t fallback) const {
  const auto it = values.find(key);
  if (it == values.end()) return fallback;
  try {
    return std::stoull(it->second);
  } catch (const std::exception&) {
    throw InvalidArgument("config key " + key + " is not an unsigned integer: " + it->second);
  }
}

EnvParams RunConfig::env_params() const {
  EnvParams p;
  p.H = get_int("env.H", p.H);
  p.K = get_int("env.K", p.K);
  p.d = get_int("env.d", p.d);
  p.states_per_level = get_int("env.states_per_level", p.states_per_level);
  p.eta_floor = get_double("env.eta_floor", p.eta_floor);
  p.concentration_psi = get_double("env.concentration_psi", p.concentration_psi);
  p.concentration_nu = get_double("env.concentration_nu", p.concentration_nu);
  p.uniform_psi = get_bool("env.uniform_psi", p.uniform_psi);
  p.max_attempts = get_int("env.max_attempts", p.max_attempts);
  return p;
}

FeatureGenParams RunConfig::feature_params() const {
  FeatureGenParams p;
  p.decoy_count = get_int("features.decoy_count", p.decoy_count);
  p.noise_weight = get_double("features.noise_weight", p.noise_weight);
  p.min_linf_gap = get_double("features.min_linf_gap", p.min_linf_gap);
  p.terminal_count = get_int("features.terminal_count", p.terminal_count);
  return p;
}

MoffleConfig RunConfig::moffle_config(const LatentLowRankMDP& mdp) const {
  MoffleConfig cfg;
  cfg.H = mdp.H;
  cfg.K = mdp.K;
  cfg.d = mdp.d;
  cfg.eta_min = min_reachability(mdp);
  cfg.eps = get_double("moffle.eps", cfg.eps);
  cfg.delta = get_double("moffle.delta", cfg.delta);
  cfg.disc_radius = get_double("moffle.disc_radius", cfg.disc_radius);
  cfg.beta_override = get_double("moffle.beta", cfg.beta_override);
  cfg.kappa_override = get_double("moffle.kappa", cfg.kappa_override);
  cfg.eps_reg_override = get_double("moffle.eps_reg", cfg.eps_reg_override);
  cfg.eps_apx_override = get_double("moffle.eps_apx", cfg.eps_apx_override);
  cfg.oracle_eps_tol = get_double("moffle.oracle_eps_tol", cfg.oracle_eps_tol);
  cfg.n_phi_hat = get_int("moffle.n_phi_hat", cfg.n_phi_hat);
  cfg.n_ell = get_int("moffle.n_ell", cfg.n_ell);
  cfg.n_phi_bar = get_int("moffle.n_phi_bar", cfg.n_phi_bar);
  cfg.n_plan = get_int("moffle.n_plan", cfg.n_plan);
  const std::string oracle = get_str("moffle.oracle", "eigen");
  if (oracle == "eigen") {
    cfg.oracle = OracleMode::Eigen;
  } else if (oracle == "minmaxmin") {
    cfg.oracle = OracleMode::MinMaxMin;
  } else if (oracle == "greedy") {
    cfg.oracle = OracleMode::Greedy;
  } else {
    throw InvalidArgument("unknown oracle mode " + oracle);
  }
  cfg.simplex = get_bool("moffle.simplex", cfg.simplex);
  cfg.planner_lag = get_int("moffle.planner_lag", cfg.planner_lag);
  cfg.planner_t_max = get_int("moffle.planner_t_max", cfg.planner_t_max);
  cfg.search_restarts = get_int("moffle.search_restarts", cfg.search_restarts);
  cfg.search_ascent_steps = get_int("moffle.search_ascent_steps", cfg.search_ascent_steps);
  cfg.seed = get_u64("seed", 0);
  return cfg;
}

std::string metrics_csv(const E2eSummary& s) {
  std::ostringstream out;
  out << "metric,index,value\n";
  out << "eta_min,," << format_double(s.eta_min) << '\n';
  out << "beta,," << format_double(s.beta) << '\n';
  out << "kappa,," << format_double(s.kappa) << '\n';
  out << "min_latent_occ,," << format_double(s.cover_report.min_latent_occ) << '\n';
  out << "eta_over_2kappa,," << format_double(s.cover_report.eta_over_2kappa) << '\n';
  out << "coverage_ok,," << (s.cover_report.coverage_ok ? 1 : 0) << '\n';
  for (size_t l = 0; l < s.cover_report.latent_occ.size(); ++l) {
    const Vector& occ = s.cover_report.latent_occ[l];
    for (long z = 0; z < occ.size(); ++z) {
      out << "latent_occ,l" << (l + 1) << "_z" << z << ',' << format_double(occ[z]) << '\n';
    }
  }
  for (size_t h = 0; h < s.cover_report.kappa_emp_k.size(); ++h) {
    out << "kappa_emp_k,h" << h << ',' << format_double(s.cover_report.kappa_emp_k[h]) << '\n';
  }
  for (size_t h = 0; h < s.phi_hat.size(); ++h) {
    out << "phi_hat,h" << h << ',' << s.phi_hat[h] << '\n';
  }
  for (size_t h = 0; h < s.phi_bar.size(); ++h) {
    out << "phi_bar,h" << h << ',' << s.phi_bar[h] << '\n';
  }
  for (size_t r = 0; r < s.reward_gap.size(); ++r) {
    out << "v_star,R" << r << ',' << format_double(s.reward_v_star[r]) << '\n';
    out << "v_hat,R" << r << ',' << format_double(s.reward_v_hat[r]) << '\n';
    out << "gap,R" << r << ',' << format_double(s.reward_gap[r]) << '\n';
  }
  return out.str();
}

E2eSummary run_e2e(const RunConfig& cfg, const std::string& out_dir) {
  fs::create_directories(out_dir);
  fs::create_directories(fs::path(out_dir) / "datasets");
  fs::create_directories(fs::path(out_dir) / "reports");

  const std::uint64_t seed = cfg.get_u64("seed", 0);
  const RngStream root(seed);

  LatentLowRankMDP mdp;
  if (cfg.has("env.load")) {
    mdp = load_env_json(cfg.get_str("env.load", ""));
  } else {
    mdp = generate_env(cfg.env_params(), root.derive("env"));
  }
  save_env_json(mdp, (fs::path(out_dir) / "env.json").string());

  const FeatureClass phis = generate_feature_class(mdp, cfg.feature_params(), root.derive("features"));
  save_feature_class(phis, (fs::path(out_dir) / "features").string());

  const int reward_count = cfg.get_int("rewards.count", 3);
  const std::vector<RewardFunction> rewards =
      generate_reward_class(mdp, reward_count, root.derive("rewards"));
  save_rewards_json(rewards, (fs::path(out_dir) / "rewards.json").string());

  const MoffleConfig mcfg = cfg.moffle_config(mdp);
  const MoffleResult res = moffle(mdp, phis, rewards, mcfg, root.derive("moffle"));

  for (int h = 0; h < mdp.H; ++h) {
    save_dataset_csv(res.data[h],
                     (fs::path(out_dir) / "datasets" / ("level" + std::to_string(h) + ".csv"))
                         .string());
    save_oracle_report_json(
        res.cover.artifacts[h].phi_hat_report,
        (fs::path(out_dir) / "reports" / ("phi_hat_h" + std::to_string(h) + ".json")).string());
    save_oracle_report_json(
        res.cover.artifacts[h].phi_bar_report,
        (fs::path(out_dir) / "reports" / ("phi_bar_h" + std::to_string(h) + ".json")).string());
    save_trace_csv(
        res.cover.artifacts[h].planner.trace,
        (fs::path(out_dir) / "reports" / ("trace_level" + std::to_string(h) + ".csv")).string());
  }
  save_cover_json(res.cover, (fs::path(out_dir) / "cover.json").string());

  E2eSummary summary;
  summary.eta_min = mcfg.eta_min;
  summary.beta = mcfg.beta();
  summary.kappa = mcfg.kappa();
  for (int h = 0; h < mdp.H; ++h) summary.phi_hat.push_back(res.cover.artifacts[h].phi_hat);
  summary.phi_bar = res.phi_bar;
  summary.cover_report = verify_cover(mdp, res.cover, mcfg);
  save_cover_report_json(summary.cover_report,
                         (fs::path(out_dir) / "reports" / "cover_report.json").string());

  const std::string variant_name = cfg.get_str("plan.variant", "full_class");
  FqiVariant variant;
  if (variant_name == "full_class") {
    variant = FqiVariant::FullClass;
  } else if (variant_name == "representation") {
    variant = FqiVariant::Representation;
  } else {
    throw InvalidArgument("unknown plan.variant " + variant_name);
  }

  for (size_t r = 0; r < rewards.size(); ++r) {
    const PlanResult plan =
        plan_downstream(mdp, res.data, phis, rewards[r], variant, mcfg,
                        variant == FqiVariant::Representation ? &res.phi_bar : nullptr);
    const double v_star = value_iteration(mdp, rewards[r]).optimal_value;
    const double v_pi = exact_policy_value(mdp, plan.policy, rewards[r]);
    summary.reward_v_star.push_back(v_star);
    summary.reward_v_hat.push_back(v_pi);
    summary.reward_gap.push_back(v_star - v_pi);
    save_policy_json(plan.policy,
                     (fs::path(out_dir) / ("policy_" + rewards[r].label + ".json")).string());
  }

  std::ofstream metrics((fs::path(out_dir) / "metrics.csv").string(), std::ios::binary);
  if (!metrics) throw IoError("cannot write metrics.csv");
  metrics << metrics_csv(summary);
  return summary;
}

}  // namespace moffle
