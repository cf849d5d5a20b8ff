#include "moffle/io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "moffle/errors.hpp"

namespace moffle {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace {

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (long r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (long c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const json& j) {
  if (!j.is_array()) throw IoError("expected a 2d array");
  if (j.empty()) return Matrix(0, 0);
  const long rows = static_cast<long>(j.size());
  const long cols = static_cast<long>(j[0].size());
  Matrix m(rows, cols);
  for (long r = 0; r < rows; ++r) {
    if (static_cast<long>(j[r].size()) != cols) throw IoError("ragged matrix rows");
    for (long c = 0; c < cols; ++c) m(r, c) = j[r][c].get<double>();
  }
  return m;
}

json vector_to_json(const Vector& v) {
  json out = json::array();
  for (long i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

Vector vector_from_json(const json& j) {
  Vector v(j.size());
  for (size_t i = 0; i < j.size(); ++i) v[static_cast<long>(i)] = j[i].get<double>();
  return v;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << text;
  if (!out) throw IoError("write failed for " + path);
}

json read_json(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw IoError("parse error in " + path + ": " + e.what());
  }
  return j;
}

}  // namespace

void save_env_json(const LatentLowRankMDP& mdp, const std::string& path) {
  json j;
  j["H"] = mdp.H;
  j["K"] = mdp.K;
  j["d"] = mdp.d;
  j["num_states"] = mdp.num_states;
  j["psi"] = json::array();
  j["nu"] = json::array();
  for (int h = 0; h < mdp.H; ++h) {
    j["psi"].push_back(matrix_to_json(mdp.psi[h]));
    j["nu"].push_back(matrix_to_json(mdp.nu[h]));
  }
  j["init"] = vector_to_json(mdp.init);
  write_text(path, j.dump(2) + "\n");
}

LatentLowRankMDP load_env_json(const std::string& path) {
  const json j = read_json(path);
  const int H = j.at("H").get<int>();
  std::vector<Matrix> psi, nu;
  for (int h = 0; h < H; ++h) {
    psi.push_back(matrix_from_json(j.at("psi").at(h)));
    nu.push_back(matrix_from_json(j.at("nu").at(h)));
  }
  return build_from_latent(H, j.at("K").get<int>(), j.at("d").get<int>(),
                           j.at("num_states").get<std::vector<int>>(), std::move(psi),
                           std::move(nu), vector_from_json(j.at("init")));
}

void save_feature_map_json(const FeatureMap& f, const std::string& path) {
  json j;
  j["level"] = f.level;
  j["d"] = f.d;
  j["num_states"] = f.num_states;
  j["num_actions"] = f.num_actions;
  j["values"] = matrix_to_json(f.values);
  j["label"] = f.label;
  write_text(path, j.dump(2) + "\n");
}

FeatureMap load_feature_map_json(const std::string& path) {
  const json j = read_json(path);
  FeatureMap f;
  f.level = j.at("level").get<int>();
  f.d = j.at("d").get<int>();
  f.num_states = j.at("num_states").get<int>();
  f.num_actions = j.at("num_actions").get<int>();
  f.values = matrix_from_json(j.at("values"));
  f.label = j.at("label").get<std::string>();
  f.validate();
  return f;
}

void save_feature_class(const FeatureClass& phis, const std::string& dir) {
  fs::create_directories(dir);
  json index;
  index["num_levels"] = phis.num_levels();
  index["star_index"] = phis.star_index;
  json counts = json::array();
  for (int h = 0; h < phis.num_levels(); ++h) {
    counts.push_back(phis.count(h));
    for (int i = 0; i < phis.count(h); ++i) {
      save_feature_map_json(
          phis.at(h, i),
          (fs::path(dir) / ("level" + std::to_string(h) + "_member" + std::to_string(i) + ".json"))
              .string());
    }
  }
  index["counts"] = counts;
  write_text((fs::path(dir) / "index.json").string(), index.dump(2) + "\n");
}

FeatureClass load_feature_class(const std::string& dir) {
  const json index = read_json((fs::path(dir) / "index.json").string());
  FeatureClass out;
  const int levels = index.at("num_levels").get<int>();
  out.levels.resize(levels);
  out.star_index = index.at("star_index").get<std::vector<int>>();
  for (int h = 0; h < levels; ++h) {
    const int count = index.at("counts").at(h).get<int>();
    for (int i = 0; i < count; ++i) {
      out.levels[h].push_back(load_feature_map_json(
          (fs::path(dir) / ("level" + std::to_string(h) + "_member" + std::to_string(i) + ".json"))
              .string()));
    }
  }
  out.validate();
  return out;
}

void save_dataset_csv(const TransitionDataset& data, const std::string& path) {
  std::ostringstream out;
  out << "# seed=" << data.seed << '\n';
  out << "# provenance=" << data.provenance << '\n';
  out << "level,x,a,x_next\n";
  for (const auto& row : data.rows) {
    out << data.level << ',' << row[0] << ',' << row[1] << ',' << row[2] << '\n';
  }
  write_text(path, out.str());
}

TransitionDataset load_dataset_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::string line;
  TransitionDataset out;
  while (std::getline(in, line) && !line.empty() && line[0] == '#') {
    const std::string body = line.substr(1);
    const size_t eq = body.find('=');
    if (eq == std::string::npos) continue;
    std::string key = body.substr(0, eq);
    key.erase(0, key.find_first_not_of(' '));
    const std::string value = body.substr(eq + 1);
    if (key == "seed") out.seed = std::stoull(value);
    if (key == "provenance") out.provenance = value;
  }
  if (!in && line.empty()) throw IoError("empty dataset file " + path);
  if (line != "level,x,a,x_next") throw IoError("bad dataset header in " + path);
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    int level, x, a, xn;
    if (std::sscanf(line.c_str(), "%d,%d,%d,%d", &level, &x, &a, &xn) != 4) {
      throw IoError("bad dataset row: " + line);
    }
    if (x < 0 || a < 0 || xn < 0) throw IoError("negative id in dataset row: " + line);
    if (first) {
      out.level = level;
      first = false;
    } else if (level != out.level) {
      throw IoError("mixed levels in " + path);
    }
    out.rows.push_back({x, a, xn});
  }
  if (out.rows.empty()) throw IoError("dataset has no rows: " + path);
  return out;
}

void save_rewards_json(const std::vector<RewardFunction>& rewards, const std::string& path) {
  json j = json::array();
  for (const auto& r : rewards) {
    json e;
    e["label"] = r.label;
    e["tables"] = json::array();
    for (const auto& t : r.tables) e["tables"].push_back(matrix_to_json(t));
    j.push_back(std::move(e));
  }
  write_text(path, j.dump(2) + "\n");
}

std::vector<RewardFunction> load_rewards_json(const std::string& path) {
  const json j = read_json(path);
  std::vector<RewardFunction> out;
  for (const auto& e : j) {
    RewardFunction r;
    r.label = e.at("label").get<std::string>();
    for (const auto& t : e.at("tables")) r.tables.push_back(matrix_from_json(t));
    r.validate();
    out.push_back(std::move(r));
  }
  return out;
}

namespace {

json policy_to_json(const Policy& pi) {
  json j;
  j["num_actions"] = pi.num_actions();
  j["deterministic"] = pi.is_deterministic();
  json levels = json::array();
  for (int h = 0; h < pi.levels(); ++h) {
    if (pi.is_deterministic()) {
      json acts = json::array();
      for (int x = 0; x < pi.probs(h).rows(); ++x) acts.push_back(pi.action(h, x));
      levels.push_back(std::move(acts));
    } else {
      levels.push_back(matrix_to_json(pi.probs(h)));
    }
  }
  j["levels"] = std::move(levels);
  return j;
}

Policy policy_from_json(const json& j) {
  const int num_actions = j.at("num_actions").get<int>();
  if (j.at("deterministic").get<bool>()) {
    std::vector<IntVector> actions;
    for (const auto& lvl : j.at("levels")) {
      IntVector acts(lvl.size());
      for (size_t x = 0; x < lvl.size(); ++x) acts[static_cast<long>(x)] = lvl[x].get<int>();
      actions.push_back(std::move(acts));
    }
    return Policy::deterministic(std::move(actions), num_actions);
  }
  std::vector<Matrix> probs;
  for (const auto& lvl : j.at("levels")) probs.push_back(matrix_from_json(lvl));
  return Policy::stochastic(std::move(probs));
}

json mixture_to_json(const MixturePolicy& rho) {
  json j;
  j["base_level"] = rho.base_level;
  j["extra_uniform"] = rho.extra_uniform;
  json members = json::array();
  for (const auto& m : rho.members) members.push_back(policy_to_json(m));
  j["members"] = std::move(members);
  return j;
}

MixturePolicy mixture_from_json(const json& j) {
  MixturePolicy rho;
  rho.base_level = j.at("base_level").get<int>();
  rho.extra_uniform = j.at("extra_uniform").get<int>();
  for (const auto& m : j.at("members")) rho.members.push_back(policy_from_json(m));
  rho.validate();
  return rho;
}

}  // namespace

void save_policy_json(const Policy& pi, const std::string& path) {
  write_text(path, policy_to_json(pi).dump(2) + "\n");
}

Policy load_policy_json(const std::string& path) { return policy_from_json(read_json(path)); }

void save_cover_json(const PolicyCover& cover, const std::string& path) {
  json j;
  json rho = json::array();
  for (const auto& r : cover.rho) rho.push_back(mixture_to_json(r));
  j["rho"] = std::move(rho);
  json gammas = json::array();
  for (const auto& art : cover.artifacts) gammas.push_back(matrix_to_json(art.planner.gamma));
  j["gamma"] = std::move(gammas);
  write_text(path, j.dump(2) + "\n");
}

PolicyCover load_cover_json(const std::string& path) {
  const json j = read_json(path);
  PolicyCover cover;
  for (const auto& r : j.at("rho")) cover.rho.push_back(mixture_from_json(r));
  if (j.contains("gamma")) {
    for (size_t h = 0; h < j.at("gamma").size(); ++h) {
      LevelArtifacts art;
      art.level = static_cast<int>(h);
      art.planner.gamma = matrix_from_json(j.at("gamma").at(h));
      cover.artifacts.push_back(std::move(art));
    }
  }
  return cover;
}

void save_trace_csv(const std::vector<EllipticalTraceRow>& trace, const std::string& path) {
  std::ostringstream out;
  out << "t,v_hat,trace_gamma,lambda_min,floored\n";
  for (const auto& row : trace) {
    out << row.t << ',' << format_double(row.v_hat) << ',' << format_double(row.trace_gamma) << ','
        << format_double(row.lambda_min) << ',' << row.floored << '\n';
  }
  write_text(path, out.str());
}

void save_oracle_report_json(const OracleReport& report, const std::string& path) {
  json j;
  j["chosen_index"] = report.chosen_index;
  j["chosen_label"] = report.chosen_label;
  j["objective"] = report.objective;
  j["iterations"] = report.iterations;
  j["exact_search"] = report.exact_search;
  j["budget_exhausted"] = report.budget_exhausted;
  j["termination"] = report.termination;
  j["wall_seconds"] = report.wall_seconds;
  json ws = json::array();
  for (const auto& w : report.witnesses) {
    json e;
    e["iteration"] = w.iteration;
    e["phi_label"] = w.phi_label;
    e["phi_next_label"] = w.phi_next_label;
    e["reward_label"] = w.reward_label;
    e["coord"] = w.coord;
    e["theta"] = vector_to_json(w.theta);
    e["gap"] = w.gap;
    ws.push_back(std::move(e));
  }
  j["witnesses"] = std::move(ws);
  write_text(path, j.dump(2) + "\n");
}

void save_cover_report_json(const CoverReport& report, const std::string& path) {
  json j;
  json occ = json::array();
  for (const auto& v : report.latent_occ) occ.push_back(vector_to_json(v));
  j["latent_occ"] = std::move(occ);
  j["min_latent_occ"] = report.min_latent_occ;
  j["eta_over_kappa"] = report.eta_over_kappa;
  j["eta_over_2kappa"] = report.eta_over_2kappa;
  j["kappa_emp_k"] = report.kappa_emp_k;
  j["kappa_cfg_k"] = report.kappa_cfg_k;
  j["coverage_ok"] = report.coverage_ok;
  write_text(path, j.dump(2) + "\n");
}

}  // namespace moffle
