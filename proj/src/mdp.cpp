#include "moffle/mdp.hpp"

#include <cmath>

#include "moffle/errors.hpp"

namespace moffle {

namespace {

void check_stochastic_rows(const Matrix& m, const std::string& what) {
  for (int r = 0; r < m.rows(); ++r) {
    double sum = 0.0;
    for (int c = 0; c < m.cols(); ++c) {
      if (m(r, c) < -kStochasticRowTol) {
        throw NonStochasticRow(what + " row " + std::to_string(r) + " has negative entry");
      }
      sum += m(r, c);
    }
    if (std::abs(sum - 1.0) > kStochasticRowTol) {
      throw NonStochasticRow(what + " row " + std::to_string(r) + " sums to " +
                             std::to_string(sum));
    }
  }
}

void check_distribution(const Vector& v, const std::string& what) {
  double sum = 0.0;
  for (int i = 0; i < v.size(); ++i) {
    if (v[i] < -kStochasticRowTol) throw NonStochasticRow(what + " has negative entry");
    sum += v[i];
  }
  if (std::abs(sum - 1.0) > kStochasticRowTol) {
    throw NonStochasticRow(what + " sums to " + std::to_string(sum));
  }
}

}  // namespace

LatentLowRankMDP build_from_latent(int H, int K, int d, std::vector<int> num_states,
                                   std::vector<Matrix> psi, std::vector<Matrix> nu, Vector init) {
  if (H < 1 || K < 1 || d < 1) throw ShapeMismatch("H, K, d must all be >= 1");
  if (static_cast<int>(num_states.size()) != H + 1) {
    throw ShapeMismatch("num_states must list levels 0..H");
  }
  for (int s : num_states) {
    if (s < 1) throw ShapeMismatch("every level needs at least one state");
  }
  if (static_cast<int>(psi.size()) != H || static_cast<int>(nu.size()) != H) {
    throw ShapeMismatch("psi and nu must have one block per acting level");
  }
  if (init.size() != num_states[0]) throw ShapeMismatch("init size != |X_0|");

  for (int h = 0; h < H; ++h) {
    if (psi[h].rows() != static_cast<long>(num_states[h]) * K || psi[h].cols() != d) {
      throw ShapeMismatch("psi[" + std::to_string(h) + "] shape");
    }
    if (nu[h].rows() != d || nu[h].cols() != num_states[h + 1]) {
      throw ShapeMismatch("nu[" + std::to_string(h) + "] shape");
    }
    check_stochastic_rows(psi[h], "psi[" + std::to_string(h) + "]");
    check_stochastic_rows(nu[h], "nu[" + std::to_string(h) + "]");
  }
  check_distribution(init, "init");

  LatentLowRankMDP mdp;
  mdp.H = H;
  mdp.K = K;
  mdp.d = d;
  mdp.num_states = std::move(num_states);
  mdp.psi = std::move(psi);
  mdp.nu = std::move(nu);
  mdp.init = std::move(init);
  mdp.trans.resize(H);
  for (int h = 0; h < H; ++h) mdp.trans[h] = mdp.psi[h] * mdp.nu[h];
  return mdp;
}

Policy Policy::deterministic(std::vector<IntVector> actions, int num_actions) {
  if (num_actions < 1) throw ShapeMismatch("policy needs num_actions >= 1");
  Policy p;
  p.deterministic_ = true;
  p.num_actions_ = num_actions;
  p.actions_ = std::move(actions);
  p.probs_.reserve(p.actions_.size());
  for (const auto& level : p.actions_) {
    Matrix m = Matrix::Zero(level.size(), num_actions);
    for (int x = 0; x < level.size(); ++x) {
      if (level[x] < 0 || level[x] >= num_actions) {
        throw ShapeMismatch("deterministic action id out of range");
      }
      m(x, level[x]) = 1.0;
    }
    p.probs_.push_back(std::move(m));
  }
  return p;
}

Policy Policy::stochastic(std::vector<Matrix> probs) {
  Policy p;
  p.deterministic_ = false;
  if (probs.empty()) throw ShapeMismatch("policy needs at least one level");
  p.num_actions_ = static_cast<int>(probs[0].cols());
  for (size_t h = 0; h < probs.size(); ++h) {
    if (probs[h].cols() != p.num_actions_) throw ShapeMismatch("inconsistent action count");
    for (int x = 0; x < probs[h].rows(); ++x) {
      double sum = 0.0;
      for (int a = 0; a < probs[h].cols(); ++a) {
        if (probs[h](x, a) < -kStochasticRowTol) throw NonStochasticRow("policy row negative");
        sum += probs[h](x, a);
      }
      if (std::abs(sum - 1.0) > kStochasticRowTol) throw NonStochasticRow("policy row sum");
    }
  }
  p.probs_ = std::move(probs);
  return p;
}

Policy Policy::uniform(const LatentLowRankMDP& mdp, int levels) {
  if (levels < 0) levels = mdp.H;
  std::vector<Matrix> probs;
  probs.reserve(levels);
  for (int h = 0; h < levels; ++h) {
    probs.push_back(Matrix::Constant(mdp.states_at(h), mdp.K, 1.0 / mdp.K));
  }
  return Policy::stochastic(std::move(probs));
}

const Matrix& Policy::probs(int h) const {
  if (h < 0 || h >= levels()) throw PolicyHorizonMismatch("policy has no level " + std::to_string(h));
  return probs_[h];
}

Vector Policy::action_probs(int h, int x) const { return probs(h).row(x).transpose(); }

int Policy::action(int h, int x) const {
  if (!deterministic_) throw InvalidArgument("action() on a stochastic policy");
  if (h < 0 || h >= levels()) throw PolicyHorizonMismatch("policy has no level " + std::to_string(h));
  return actions_[h][x];
}

int Policy::sample_action(int h, int x, RngStream& rng) const {
  if (deterministic_) return actions_.at(h)[x];
  return rng.categorical(action_probs(h, x));
}

MixturePolicy MixturePolicy::with_extra(int i) const {
  if (i < 0) throw InvalidArgument("appended uniform count must be >= 0");
  MixturePolicy out = *this;
  out.extra_uniform += i;
  return out;
}

void MixturePolicy::validate() const {
  if (extra_uniform < 0) throw InvalidArgument("extra_uniform < 0");
  if (base_level >= 0) {
    if (members.empty()) throw PolicyHorizonMismatch("mixture with base_level >= 0 needs members");
    for (const auto& m : members) {
      if (m.levels() < base_level + 1) {
        throw PolicyHorizonMismatch("mixture member does not cover base_level");
      }
    }
  }
}

MixturePolicy uniform_mixture(int levels_covered) {
  MixturePolicy rho;
  rho.base_level = -1;
  rho.extra_uniform = levels_covered + 1;
  return rho;
}

namespace {

Trajectory run_episode(const LatentLowRankMDP& mdp, const Policy* pi, int member_base,
                       RngStream& rng, int levels) {
  if (levels < 0) levels = mdp.H;
  if (levels > mdp.H) throw PolicyHorizonMismatch("episode longer than horizon");
  Trajectory tr;
  tr.states.reserve(levels + 1);
  int x = rng.categorical(mdp.init);
  tr.states.push_back(x);
  for (int h = 0; h < levels; ++h) {
    int a;
    if (pi != nullptr && h <= member_base) {
      a = pi->sample_action(h, x, rng);
    } else {
      a = rng.uniform_int(mdp.K);
    }
    const int row = sa_index(x, a, mdp.K);
    const int z = rng.categorical(mdp.psi[h].row(row).transpose());
    const int x_next = rng.categorical(mdp.nu[h].row(z).transpose());
    tr.actions.push_back(a);
    tr.latents.push_back(z);
    tr.states.push_back(x_next);
    x = x_next;
  }
  return tr;
}

}  // namespace

Trajectory sample_episode(const LatentLowRankMDP& mdp, const Policy& pi, RngStream& rng,
                          int levels) {
  if (levels < 0) levels = mdp.H;
  if (pi.levels() < levels) throw PolicyHorizonMismatch("policy covers fewer levels than episode");
  return run_episode(mdp, &pi, levels - 1, rng, levels);
}

Trajectory sample_episode(const LatentLowRankMDP& mdp, const MixturePolicy& rho, RngStream& rng,
                          int levels) {
  if (levels < 0) levels = mdp.H;
  rho.validate();
  if (rho.last_level() + 1 < levels) {
    throw PolicyHorizonMismatch("mixture does not cover requested levels");
  }
  const Policy* member = nullptr;
  if (!rho.members.empty()) {
    member = &rho.members[rng.uniform_int(static_cast<int>(rho.members.size()))];
  }
  return run_episode(mdp, member, rho.base_level, rng, levels);
}

TransitionDataset TransitionDataset::slice(int n) const {
  if (n < 1 || n > size()) throw InvalidArgument("slice size out of range");
  TransitionDataset out;
  out.level = level;
  out.rows.assign(rows.begin(), rows.begin() + n);
  out.provenance = provenance + "[0:" + std::to_string(n) + "]";
  out.seed = seed;
  return out;
}

namespace {

template <typename PolicyLike>
TransitionDataset collect_impl(const LatentLowRankMDP& mdp, const PolicyLike& pi, int level, int n,
                               const RngStream& rng, const std::string& provenance) {
  if (n < 1) throw InvalidArgument("collect_dataset needs n >= 1");
  if (level < 0 || level >= mdp.H) throw LevelMismatch("dataset level out of range");
  TransitionDataset out;
  out.level = level;
  out.seed = rng.key();
  out.provenance = provenance;
  out.rows.resize(n);
  for (int i = 0; i < n; ++i) {
    RngStream ep = rng.derive(static_cast<std::uint64_t>(i));
    Trajectory tr = sample_episode(mdp, pi, ep, level + 1);
    out.rows[i] = {tr.states[level], tr.actions[level], tr.states[level + 1]};
  }
  return out;
}

}  // namespace

TransitionDataset collect_dataset(const LatentLowRankMDP& mdp, const Policy& pi, int level, int n,
                                  const RngStream& rng) {
  return collect_impl(mdp, pi, level, n, rng, "policy");
}

TransitionDataset collect_dataset(const LatentLowRankMDP& mdp, const MixturePolicy& rho, int level,
                                  int n, const RngStream& rng) {
  rho.validate();
  if (rho.last_level() < level) throw PolicyHorizonMismatch("mixture does not reach dataset level");
  return collect_impl(mdp, rho, level, n, rng,
                      "mixture(base=" + std::to_string(rho.base_level) +
                          ",extra=" + std::to_string(rho.extra_uniform) + ")");
}

}  // namespace moffle
