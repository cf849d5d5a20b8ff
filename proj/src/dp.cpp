#include "moffle/dp.hpp"

#include <cmath>

#include "moffle/errors.hpp"

namespace moffle {

namespace {

// Forward state distribution at levels 0..h for a concrete per-step rule.
// rule(h) must return a row-stochastic |X_h| x K matrix.
template <typename Rule>
Vector state_dist_at(const LatentLowRankMDP& mdp, Rule rule, int h) {
  if (h < 0 || h > mdp.H) throw LevelMismatch("occupancy level out of range");
  Vector dist = mdp.init;
  for (int l = 0; l < h; ++l) {
    const Matrix probs = rule(l);
    Vector next = Vector::Zero(mdp.states_at(l + 1));
    for (int x = 0; x < mdp.states_at(l); ++x) {
      if (dist[x] == 0.0) continue;
      for (int a = 0; a < mdp.K; ++a) {
        const double w = dist[x] * probs(x, a);
        if (w == 0.0) continue;
        next += w * mdp.trans[l].row(sa_index(x, a, mdp.K)).transpose();
      }
    }
    dist = std::move(next);
  }
  return dist;
}

struct MemberRule {
  const LatentLowRankMDP* mdp;
  const Policy* member;  // may be null (pure uniform)
  int base_level;
  Matrix operator()(int l) const {
    if (member != nullptr && l <= base_level) return member->probs(l);
    return Matrix::Constant(mdp->states_at(l), mdp->K, 1.0 / mdp->K);
  }
};

Matrix occupancy_from_dist(const LatentLowRankMDP& mdp, const Vector& dist, const Matrix& probs) {
  Matrix occ(dist.size(), mdp.K);
  for (int x = 0; x < dist.size(); ++x) {
    for (int a = 0; a < mdp.K; ++a) occ(x, a) = dist[x] * probs(x, a);
  }
  return occ;
}

void check_mixture_level(const MixturePolicy& rho, int last_action_level) {
  rho.validate();
  if (rho.last_level() < last_action_level) {
    throw PolicyHorizonMismatch("mixture does not cover level " +
                                std::to_string(last_action_level));
  }
}

}  // namespace

Matrix exact_state_action_occupancy(const LatentLowRankMDP& mdp, const Policy& pi, int h) {
  if (pi.levels() < h + 1) throw PolicyHorizonMismatch("policy does not cover level");
  MemberRule rule{&mdp, &pi, pi.levels() - 1};
  const Vector dist = state_dist_at(mdp, rule, h);
  return occupancy_from_dist(mdp, dist, rule(h));
}

Matrix exact_state_action_occupancy(const LatentLowRankMDP& mdp, const MixturePolicy& rho, int h) {
  check_mixture_level(rho, h);
  Matrix occ = Matrix::Zero(mdp.states_at(h), mdp.K);
  const int m = rho.pure_uniform() ? 1 : static_cast<int>(rho.members.size());
  for (int i = 0; i < m; ++i) {
    MemberRule rule{&mdp, rho.pure_uniform() ? nullptr : &rho.members[i], rho.base_level};
    const Vector dist = state_dist_at(mdp, rule, h);
    occ += occupancy_from_dist(mdp, dist, rule(h));
  }
  return occ / m;
}

namespace {

Vector push_forward(const LatentLowRankMDP& mdp, const Matrix& occ, int h_from) {
  Vector dist = Vector::Zero(mdp.states_at(h_from + 1));
  for (int x = 0; x < occ.rows(); ++x) {
    for (int a = 0; a < mdp.K; ++a) {
      if (occ(x, a) == 0.0) continue;
      dist += occ(x, a) * mdp.trans[h_from].row(sa_index(x, a, mdp.K)).transpose();
    }
  }
  return dist;
}

}  // namespace

Vector exact_state_occupancy(const LatentLowRankMDP& mdp, const Policy& pi, int h) {
  if (h == 0) return mdp.init;
  return push_forward(mdp, exact_state_action_occupancy(mdp, pi, h - 1), h - 1);
}

Vector exact_state_occupancy(const LatentLowRankMDP& mdp, const MixturePolicy& rho, int h) {
  if (h == 0) return mdp.init;
  return push_forward(mdp, exact_state_action_occupancy(mdp, rho, h - 1), h - 1);
}

namespace {

Vector latent_from_occupancy(const LatentLowRankMDP& mdp, const Matrix& occ, int h) {
  Vector out = Vector::Zero(mdp.d);
  for (int x = 0; x < occ.rows(); ++x) {
    for (int a = 0; a < mdp.K; ++a) {
      out += occ(x, a) * mdp.psi[h].row(sa_index(x, a, mdp.K)).transpose();
    }
  }
  return out;
}

}  // namespace

Vector exact_latent_occupancy(const LatentLowRankMDP& mdp, const Policy& pi, int level) {
  if (level < 1 || level > mdp.H) throw LevelMismatch("latent level out of range");
  return latent_from_occupancy(mdp, exact_state_action_occupancy(mdp, pi, level - 1), level - 1);
}

Vector exact_latent_occupancy(const LatentLowRankMDP& mdp, const MixturePolicy& rho, int level) {
  if (level < 1 || level > mdp.H) throw LevelMismatch("latent level out of range");
  return latent_from_occupancy(mdp, exact_state_action_occupancy(mdp, rho, level - 1), level - 1);
}

BellmanBackup exact_bellman_backup(const LatentLowRankMDP& mdp, int h, const Vector& f_next) {
  if (h < 0 || h >= mdp.H) throw LevelMismatch("backup level out of range");
  if (f_next.size() != mdp.states_at(h + 1)) throw ShapeMismatch("backup target size");
  BellmanBackup out;
  out.theta = mdp.nu[h] * f_next;
  Matrix flat = mdp.psi[h] * out.theta;  // (|X_h|*K) x 1
  out.values = Matrix(mdp.states_at(h), mdp.K);
  for (int x = 0; x < mdp.states_at(h); ++x) {
    for (int a = 0; a < mdp.K; ++a) out.values(x, a) = flat(sa_index(x, a, mdp.K), 0);
  }
  return out;
}

namespace {

void check_reward_range(const Matrix& r) {
  for (int i = 0; i < r.rows(); ++i) {
    for (int j = 0; j < r.cols(); ++j) {
      if (r(i, j) < -kRewardRangeTol || r(i, j) > 1.0 + kRewardRangeTol) {
        throw RewardOutOfRange("reward entry " + std::to_string(r(i, j)));
      }
    }
  }
}

}  // namespace

ValueIterationResult value_iteration(const LatentLowRankMDP& mdp, const RewardFunction& reward) {
  if (reward.levels() != mdp.H) throw ShapeMismatch("reward must cover levels 0..H-1");
  ValueIterationResult out;
  out.q.resize(mdp.H);
  out.v.resize(mdp.H + 1);
  out.v[mdp.H] = Vector::Zero(mdp.states_at(mdp.H));
  std::vector<IntVector> greedy(mdp.H);
  for (int h = mdp.H - 1; h >= 0; --h) {
    check_reward_range(reward.tables[h]);
    const BellmanBackup bb = exact_bellman_backup(mdp, h, out.v[h + 1]);
    out.q[h] = reward.tables[h] + bb.values;
    out.v[h] = Vector::Zero(mdp.states_at(h));
    greedy[h] = IntVector::Zero(mdp.states_at(h));
    for (int x = 0; x < mdp.states_at(h); ++x) {
      int best = 0;
      for (int a = 1; a < mdp.K; ++a) {
        if (out.q[h](x, a) > out.q[h](x, best)) best = a;
      }
      greedy[h][x] = best;
      out.v[h][x] = out.q[h](x, best);
    }
  }
  out.policy = Policy::deterministic(std::move(greedy), mdp.K);
  out.optimal_value = mdp.init.dot(out.v[0]);
  return out;
}

TerminalVIResult value_iteration_terminal(const LatentLowRankMDP& mdp, int h_last,
                                          const Matrix& reward) {
  if (h_last < 0 || h_last >= mdp.H) throw LevelMismatch("terminal level out of range");
  if (reward.rows() != mdp.states_at(h_last) || reward.cols() != mdp.K) {
    throw ShapeMismatch("terminal reward shape");
  }
  check_reward_range(reward);
  std::vector<IntVector> greedy(h_last + 1);
  Vector v;
  for (int h = h_last; h >= 0; --h) {
    Matrix q;
    if (h == h_last) {
      q = reward;
    } else {
      const BellmanBackup bb = exact_bellman_backup(mdp, h, v);
      q = bb.values;
    }
    greedy[h] = IntVector::Zero(mdp.states_at(h));
    Vector vh = Vector::Zero(mdp.states_at(h));
    for (int x = 0; x < mdp.states_at(h); ++x) {
      int best = 0;
      for (int a = 1; a < mdp.K; ++a) {
        if (q(x, a) > q(x, best)) best = a;
      }
      greedy[h][x] = best;
      vh[x] = q(x, best);
    }
    v = std::move(vh);
  }
  TerminalVIResult out;
  out.policy = Policy::deterministic(std::move(greedy), mdp.K);
  out.value = mdp.init.dot(v);
  return out;
}

double exact_policy_value(const LatentLowRankMDP& mdp, const Policy& pi,
                          const RewardFunction& reward) {
  if (pi.levels() < mdp.H) throw PolicyHorizonMismatch("policy shorter than horizon");
  double total = 0.0;
  for (int h = 0; h < mdp.H; ++h) {
    check_reward_range(reward.tables.at(h));
    const Matrix occ = exact_state_action_occupancy(mdp, pi, h);
    total += occ.cwiseProduct(reward.tables[h]).sum();
  }
  return total;
}

double exact_policy_value(const LatentLowRankMDP& mdp, const MixturePolicy& rho,
                          const RewardFunction& reward) {
  check_mixture_level(rho, mdp.H - 1);
  double total = 0.0;
  for (int h = 0; h < mdp.H; ++h) {
    check_reward_range(reward.tables.at(h));
    const Matrix occ = exact_state_action_occupancy(mdp, rho, h);
    total += occ.cwiseProduct(reward.tables[h]).sum();
  }
  return total;
}

Matrix reachability_table(const LatentLowRankMDP& mdp) {
  Matrix out(mdp.H, mdp.d);
  for (int h = 0; h < mdp.H; ++h) {
    for (int z = 0; z < mdp.d; ++z) {
      Matrix reward(mdp.states_at(h), mdp.K);
      for (int x = 0; x < mdp.states_at(h); ++x) {
        for (int a = 0; a < mdp.K; ++a) reward(x, a) = mdp.psi[h](sa_index(x, a, mdp.K), z);
      }
      out(h, z) = value_iteration_terminal(mdp, h, reward).value;
    }
  }
  return out;
}

double min_reachability(const LatentLowRankMDP& mdp) { return reachability_table(mdp).minCoeff(); }

double max_state_occupancy(const LatentLowRankMDP& mdp, int h, int x) {
  if (h < 0 || h > mdp.H) throw LevelMismatch("occupancy level out of range");
  if (h == 0) return mdp.init[x];
  Matrix reward = Matrix::Zero(mdp.states_at(h - 1), mdp.K);
  // Reaching x at level h == collecting T(x | ., .) as a terminal reward at h-1.
  for (int s = 0; s < mdp.states_at(h - 1); ++s) {
    for (int a = 0; a < mdp.K; ++a) reward(s, a) = mdp.trans[h - 1](sa_index(s, a, mdp.K), x);
  }
  return value_iteration_terminal(mdp, h - 1, reward).value;
}

}  // namespace moffle
