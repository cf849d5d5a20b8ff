#include "moffle/planners.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <limits>

#include "moffle/errors.hpp"

namespace moffle {

PlannerWorkspace PlannerWorkspace::build(const std::vector<const TransitionDataset*>& data,
                                         const FeatureClass& phis, const LatentLowRankMDP& mdp) {
  PlannerWorkspace ws;
  ws.phis = &phis;
  ws.num_states = mdp.num_states;
  ws.K = mdp.K;
  ws.H = mdp.H;
  ws.init = mdp.init;
  ws.cache.reserve(data.size());
  for (size_t h = 0; h < data.size(); ++h) {
    if (data[h] == nullptr) throw MissingLevelData("no dataset for level " + std::to_string(h));
    if (data[h]->level != static_cast<int>(h)) throw LevelMismatch("dataset order");
    ws.cache.push_back(
        build_design_cache(*data[h], phis.level(static_cast<int>(h)), mdp.states_at(h + 1)));
  }
  return ws;
}

PlannerWorkspace PlannerWorkspace::build_exact(const LatentLowRankMDP& mdp,
                                               const FeatureClass& phis) {
  PlannerWorkspace ws;
  ws.phis = &phis;
  ws.num_states = mdp.num_states;
  ws.K = mdp.K;
  ws.H = mdp.H;
  ws.init = mdp.init;
  ws.cache.reserve(mdp.H);
  for (int h = 0; h < mdp.H; ++h) {
    const Matrix w =
        Matrix::Constant(mdp.states_at(h), mdp.K, 1.0 / (mdp.states_at(h) * mdp.K));
    ws.cache.push_back(build_exact_design_cache(mdp, h, phis.level(h), w));
  }
  return ws;
}

namespace {

struct LevelFit {
  int phi = -1;
  Vector w;
};

// Loss-minimizing (phi, w) over the variant's candidate set; ties keep the
// lowest feature index.
LevelFit fit_level(const PlannerWorkspace& ws, int h, const Vector& v_next, double radius,
                   const std::vector<int>* only_phi) {
  const DesignCache& cache = ws.cache.at(h);
  LevelFit out;
  double best = std::numeric_limits<double>::infinity();
  const int count = static_cast<int>(cache.per_phi.size());
  for (int p = 0; p < count; ++p) {
    if (only_phi != nullptr && p != only_phi->at(h)) continue;
    const LsqResult fit = cache.fit(p, v_next, radius);
    const double loss = cache.loss_at(p, fit.w, v_next);
    if (loss < best) {
      best = loss;
      out.phi = p;
      out.w = fit.w;
    }
  }
  if (out.phi < 0) throw EmptyClass("no candidate fitted");
  return out;
}

Matrix q_table_from_fit(const PlannerWorkspace& ws, int h, const LevelFit& fit,
                        const RewardFunction& reward, bool clip_linear, double clip_hi) {
  const FeatureMap& f = ws.phis->at(h, fit.phi);
  Matrix q(f.num_states, f.num_actions);
  for (int x = 0; x < f.num_states; ++x) {
    for (int a = 0; a < f.num_actions; ++a) {
      double lin = f.row(x, a).dot(fit.w);
      if (clip_linear) lin = clip(lin, 0.0, clip_hi);
      q(x, a) = reward.at(h, x, a) + lin;
    }
  }
  return q;
}

}  // namespace

FqiResult fqi(const PlannerWorkspace& ws, const RewardFunction& reward, FqiVariant variant,
              double radius, int horizon, const std::vector<int>* rep_index) {
  if (horizon < 1 || horizon > ws.data_levels()) throw MissingLevelData("fqi horizon vs data");
  if (radius <= 0.0) throw InvalidArgument("fqi radius must be positive");
  reward.validate();
  if (variant == FqiVariant::Representation && rep_index == nullptr) {
    throw InvalidArgument("representation variant needs per-level feature indices");
  }
  const double v_hi = variant == FqiVariant::Elliptical ? 1.0 : static_cast<double>(ws.H);
  const bool clip_linear = variant == FqiVariant::Representation;

  FqiResult out;
  out.q_tables.resize(horizon);
  out.v_tables.resize(horizon + 1);
  out.chosen_phi.resize(horizon);
  out.v_tables[horizon] = Vector::Zero(ws.num_states.at(horizon));
  for (int h = horizon - 1; h >= 0; --h) {
    const LevelFit fit = fit_level(ws, h, out.v_tables[h + 1], radius,
                                   variant == FqiVariant::Representation ? rep_index : nullptr);
    out.chosen_phi[h] = fit.phi;
    out.q_tables[h] = q_table_from_fit(ws, h, fit, reward, clip_linear, v_hi);
    Vector v(ws.num_states.at(h));
    for (int x = 0; x < ws.num_states.at(h); ++x) {
      v[x] = clip(out.q_tables[h].row(x).maxCoeff(), 0.0, v_hi);
    }
    out.v_tables[h] = std::move(v);
  }
  out.policy = greedy_policy_from_q(out.q_tables, ws.K);
  out.v_init = ws.init.dot(out.v_tables[0]);
  return out;
}

FqeResult fqe(const PlannerWorkspace& ws, const RewardFunction& reward, const Policy& pi,
              int horizon, double radius) {
  if (horizon < 1 || horizon > ws.data_levels()) throw MissingLevelData("fqe horizon vs data");
  if (pi.levels() < horizon) throw PolicyHorizonMismatch("fqe policy vs horizon");
  reward.validate();
  if (radius <= 0.0) {
    radius = std::sqrt(static_cast<double>(ws.phis->at(0, 0).d));
  }
  FqeResult out;
  out.v_tables.resize(horizon + 1);
  out.chosen_phi.resize(horizon);
  out.v_tables[horizon] = Vector::Zero(ws.num_states.at(horizon));
  for (int h = horizon - 1; h >= 0; --h) {
    const LevelFit fit = fit_level(ws, h, out.v_tables[h + 1], radius, nullptr);
    out.chosen_phi[h] = fit.phi;
    const FeatureMap& f = ws.phis->at(h, fit.phi);
    Vector v(ws.num_states.at(h));
    for (int x = 0; x < ws.num_states.at(h); ++x) {
      const Vector probs = pi.action_probs(h, x);
      double q_pi = 0.0;
      for (int a = 0; a < ws.K; ++a) {
        if (probs[a] == 0.0) continue;
        q_pi += probs[a] * (reward.at(h, x, a) + f.row(x, a).dot(fit.w));
      }
      v[x] = clip(q_pi, 0.0, 1.0);
    }
    out.v_tables[h] = std::move(v);
  }
  out.value = ws.init.dot(out.v_tables[0]);
  return out;
}

int elliptical_default_t_max(int d, double beta) {
  return static_cast<int>(std::ceil(8.0 * d / beta * std::log(1.0 + 8.0 / beta))) + 5;
}

EllipticalResult elliptical_planner(const PlannerWorkspace& ws, const FeatureMap& phi_hat,
                                    int h_last, double beta, int t_max) {
  if (h_last < 0 || h_last >= ws.data_levels()) throw MissingLevelData("planner level vs data");
  if (phi_hat.level != h_last) throw LevelMismatch("phi_hat level");
  if (beta <= 0.0 || beta > 1.0) throw InvalidArgument("beta must lie in (0, 1]");
  const int d = phi_hat.d;
  if (t_max <= 0) t_max = elliptical_default_t_max(d, beta);
  const double fqi_radius = std::sqrt(static_cast<double>(d));

  EllipticalResult out;
  Matrix gamma = Matrix::Identity(d, d);
  out.mixture.base_level = h_last;
  out.mixture.extra_uniform = 0;

  for (int t = 1; t <= t_max; ++t) {
    const Matrix gamma_inv = gamma.llt().solve(Matrix::Identity(d, d));
    Matrix bonus(phi_hat.num_states, phi_hat.num_actions);
    for (int x = 0; x < phi_hat.num_states; ++x) {
      for (int a = 0; a < phi_hat.num_actions; ++a) {
        const Vector v = phi_hat.row(x, a);
        bonus(x, a) = clip(v.dot(gamma_inv * v), 0.0, 1.0);
      }
    }
    RewardFunction r_t;
    r_t.label = "elliptical_t" + std::to_string(t);
    for (int h = 0; h < h_last; ++h) {
      r_t.tables.push_back(Matrix::Zero(ws.num_states.at(h), ws.K));
    }
    r_t.tables.push_back(bonus);

    const FqiResult plan = fqi(ws, r_t, FqiVariant::Elliptical, fqi_radius, h_last + 1);
    const FqeResult value = fqe(ws, r_t, plan.policy, h_last + 1);
    const double v_hat = clip(value.value, 0.0, 1.0);

    // Estimated feature second-moment matrix under the new policy.
    Matrix sigma(d, d);
    for (int i = 0; i < d; ++i) {
      for (int j = i; j < d; ++j) {
        Matrix pair(phi_hat.num_states, phi_hat.num_actions);
        for (int x = 0; x < phi_hat.num_states; ++x) {
          for (int a = 0; a < phi_hat.num_actions; ++a) {
            const Vector v = phi_hat.row(x, a);
            pair(x, a) = 0.5 * (1.0 + v[i] * v[j]);
          }
        }
        RewardFunction r_ij;
        r_ij.label = "sigma";
        for (int h = 0; h < h_last; ++h) {
          r_ij.tables.push_back(Matrix::Zero(ws.num_states.at(h), ws.K));
        }
        r_ij.tables.push_back(std::move(pair));
        const double est = clip(2.0 * fqe(ws, r_ij, plan.policy, h_last + 1).value - 1.0, -1.0, 1.0);
        sigma(i, j) = est;
        sigma(j, i) = est;
      }
    }

    gamma += sigma;
    int floored = 0;
    {
      Eigen::SelfAdjointEigenSolver<Matrix> eig(gamma);
      Vector vals = eig.eigenvalues();
      for (int i = 0; i < d; ++i) {
        if (vals[i] < 1.0) {
          vals[i] = 1.0;
          ++floored;
        }
      }
      if (floored > 0) {
        gamma = eig.eigenvectors() * vals.asDiagonal() * eig.eigenvectors().transpose();
      }
    }

    out.mixture.members.push_back(plan.policy);
    out.iteration_rewards.push_back(bonus);
    EllipticalTraceRow row;
    row.t = t;
    row.v_hat = v_hat;
    row.trace_gamma = gamma.trace();
    row.lambda_min = Eigen::SelfAdjointEigenSolver<Matrix>(gamma).eigenvalues().minCoeff();
    row.floored = floored;
    out.trace.push_back(row);

    if (v_hat <= 0.75 * beta) {
      out.halted = true;
      break;
    }
  }
  out.gamma = gamma;
  return out;
}

}  // namespace moffle
