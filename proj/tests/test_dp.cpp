#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "moffle/dp.hpp"
#include "moffle/errors.hpp"
#include "moffle/generators.hpp"

using namespace moffle;

namespace {

LatentLowRankMDP random_env(std::uint64_t seed, EnvParams params = EnvParams{}) {
  return generate_env(params, RngStream(seed));
}

LatentLowRankMDP small_env(std::uint64_t seed) {
  EnvParams p;
  p.H = 2;
  p.states_per_level = 3;
  p.d = 2;
  p.eta_floor = 0.0;
  return generate_env(p, RngStream(seed));
}

Policy random_deterministic(const LatentLowRankMDP& mdp, RngStream& rng) {
  std::vector<IntVector> actions;
  for (int h = 0; h < mdp.H; ++h) {
    IntVector row(mdp.states_at(h));
    for (int x = 0; x < mdp.states_at(h); ++x) row[x] = rng.uniform_int(mdp.K);
    actions.push_back(row);
  }
  return Policy::deterministic(actions, mdp.K);
}

RewardFunction random_reward(const LatentLowRankMDP& mdp, std::uint64_t seed) {
  return generate_reward_class(mdp, 1, RngStream(seed))[0];
}

}  // namespace

TEST_CASE("occupancy at the first level is init times action probabilities") {
  const LatentLowRankMDP mdp = random_env(1);
  const Policy pi = Policy::uniform(mdp);
  const Matrix occ = exact_state_action_occupancy(mdp, pi, 0);
  for (int x = 0; x < mdp.states_at(0); ++x) {
    for (int a = 0; a < mdp.K; ++a) {
      CHECK(occ(x, a) == doctest::Approx(mdp.init[x] / mdp.K).epsilon(1e-12));
    }
  }
  CHECK(occ.sum() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("uniform dynamics give uniform occupancy at every level") {
  EnvParams p;
  p.uniform_psi = true;
  p.states_per_level = 4;
  LatentLowRankMDP mdp = random_env(2, p);
  // Force uniform emissions and init as well: fully symmetric environment.
  for (auto& n : mdp.nu) n.setConstant(1.0 / n.cols());
  mdp.init.setConstant(1.0 / mdp.init.size());
  const LatentLowRankMDP sym =
      build_from_latent(mdp.H, mdp.K, mdp.d, mdp.num_states, mdp.psi, mdp.nu, mdp.init);
  const Policy pi = Policy::uniform(sym);
  for (int h = 0; h <= sym.H; ++h) {
    const Vector occ = exact_state_occupancy(sym, pi, h);
    for (int x = 0; x < sym.states_at(h); ++x) {
      CHECK(occ[x] == doctest::Approx(1.0 / sym.states_at(h)).epsilon(1e-12));
    }
  }
}

TEST_CASE("occupancies sum to one and match Monte Carlo") {
  const LatentLowRankMDP mdp = random_env(3);
  RngStream prng(17);
  const Policy pi = random_deterministic(mdp, prng);
  const int h = 2, n = 100000;
  const Matrix occ = exact_state_action_occupancy(mdp, pi, h);
  CHECK(occ.sum() == doctest::Approx(1.0).epsilon(1e-12));
  Matrix counts = Matrix::Zero(mdp.states_at(h), mdp.K);
  const RngStream root(23);
  for (int i = 0; i < n; ++i) {
    RngStream ep = root.derive(i);
    const Trajectory tr = sample_episode(mdp, pi, ep);
    counts(tr.states[h], tr.actions[h]) += 1.0;
  }
  for (int x = 0; x < mdp.states_at(h); ++x) {
    for (int a = 0; a < mdp.K; ++a) {
      const double p = occ(x, a);
      const double sigma = std::sqrt(n * p * (1.0 - p));
      CHECK(std::abs(counts(x, a) - n * p) <= 3.0 * sigma + 1.0);
    }
  }
}

TEST_CASE("latent occupancy: degenerate and uniform cases") {
  // Single latent: probability one.
  std::vector<Matrix> psi = {Matrix::Ones(2 * 1, 1)};
  std::vector<Matrix> nu = {Matrix::Constant(1, 2, 0.5)};
  Vector init(2);
  init << 0.5, 0.5;
  const LatentLowRankMDP single = build_from_latent(1, 1, 1, {2, 2}, psi, nu, init);
  CHECK(exact_latent_occupancy(single, Policy::uniform(single), 1)[0] ==
        doctest::Approx(1.0).epsilon(1e-12));

  EnvParams p;
  p.uniform_psi = true;
  const LatentLowRankMDP mdp = random_env(4, p);
  RngStream prng(5);
  const Policy pi = random_deterministic(mdp, prng);
  for (int l = 1; l <= mdp.H; ++l) {
    const Vector occ = exact_latent_occupancy(mdp, pi, l);
    for (int z = 0; z < mdp.d; ++z) {
      CHECK(occ[z] == doctest::Approx(1.0 / mdp.d).epsilon(1e-12));
    }
  }
}

TEST_CASE("latent occupancy matches recorded Monte Carlo latents") {
  const LatentLowRankMDP mdp = random_env(6);
  const Policy pi = Policy::uniform(mdp);
  const int l = 2, n = 100000;
  const Vector occ = exact_latent_occupancy(mdp, pi, l);
  Vector counts = Vector::Zero(mdp.d);
  const RngStream root(29);
  for (int i = 0; i < n; ++i) {
    RngStream ep = root.derive(i);
    const Trajectory tr = sample_episode(mdp, pi, ep);
    counts[tr.latents[l - 1]] += 1.0;
  }
  for (int z = 0; z < mdp.d; ++z) {
    const double p = occ[z];
    const double sigma = std::sqrt(n * p * (1.0 - p));
    CHECK(std::abs(counts[z] - n * p) <= 3.0 * sigma + 1.0);
  }
}

TEST_CASE("backup of a constant function is that constant") {
  const LatentLowRankMDP mdp = random_env(7);
  const double c = 0.37;
  const BellmanBackup bb =
      exact_bellman_backup(mdp, 1, Vector::Constant(mdp.states_at(2), c));
  for (int x = 0; x < mdp.states_at(1); ++x) {
    for (int a = 0; a < mdp.K; ++a) CHECK(bb.values(x, a) == doctest::Approx(c).epsilon(1e-12));
  }
  // theta = c * (row sums of nu) = c * ones.
  for (int z = 0; z < mdp.d; ++z) CHECK(bb.theta[z] == doctest::Approx(c).epsilon(1e-12));
}

TEST_CASE("backup of an indicator on a certain successor is one") {
  std::vector<Matrix> psi = {Matrix::Ones(1, 1)};
  std::vector<Matrix> nu = {Matrix::Ones(1, 1)};
  const LatentLowRankMDP chain = build_from_latent(1, 1, 1, {1, 1}, psi, nu, Vector::Ones(1));
  const BellmanBackup bb = exact_bellman_backup(chain, 0, Vector::Ones(1));
  CHECK(bb.values(0, 0) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("backups are linear in phi* with bounded theta") {
  const LatentLowRankMDP mdp = random_env(8);
  RngStream rng(31);
  const double cap = std::sqrt(static_cast<double>(mdp.d));
  for (int h = 0; h < mdp.H; ++h) {
    for (int rep = 0; rep < 100; ++rep) {
      Vector f(mdp.states_at(h + 1));
      for (int x = 0; x < f.size(); ++x) f[x] = rng.uniform();
      const BellmanBackup bb = exact_bellman_backup(mdp, h, f);
      CHECK(bb.theta.norm() <= cap + 1e-12);
      for (int x = 0; x < mdp.states_at(h); ++x) {
        for (int a = 0; a < mdp.K; ++a) {
          CHECK(std::abs(bb.values(x, a) - mdp.phi_star_row(h, x, a).dot(bb.theta)) < 1e-10);
        }
      }
    }
  }
}

TEST_CASE("value iteration on a single always-rewarding action") {
  const int H = 3;
  std::vector<Matrix> psi, nu;
  for (int h = 0; h < H; ++h) {
    psi.push_back(Matrix::Ones(1 * 2, 1));
    nu.push_back(Matrix::Ones(1, 1));
  }
  const LatentLowRankMDP mdp =
      build_from_latent(H, 2, 1, std::vector<int>(H + 1, 1), psi, nu, Vector::Ones(1));
  RewardFunction r;
  r.label = "pick0";
  for (int h = 0; h < H; ++h) {
    Matrix t(1, 2);
    t << 1.0, 0.0;
    r.tables.push_back(t);
  }
  const ValueIterationResult vi = value_iteration(mdp, r);
  CHECK(vi.optimal_value == doctest::Approx(static_cast<double>(H)).epsilon(1e-12));
  for (int h = 0; h < H; ++h) CHECK(vi.policy.action(h, 0) == 0);
}

TEST_CASE("zero reward gives zero value and lowest-id actions") {
  const LatentLowRankMDP mdp = random_env(9);
  const ValueIterationResult vi = value_iteration(mdp, zero_reward(mdp));
  CHECK(vi.optimal_value == doctest::Approx(0.0).epsilon(1e-15));
  for (int h = 0; h < mdp.H; ++h) {
    for (int x = 0; x < mdp.states_at(h); ++x) CHECK(vi.policy.action(h, x) == 0);
  }
}

TEST_CASE("value iteration beats exhaustive deterministic policy enumeration") {
  const LatentLowRankMDP mdp = small_env(10);
  const RewardFunction r = random_reward(mdp, 11);
  const ValueIterationResult vi = value_iteration(mdp, r);

  // All deterministic policies: K^{sum |X_h|} assignments.
  std::vector<int> sizes;
  int total_states = 0;
  for (int h = 0; h < mdp.H; ++h) {
    sizes.push_back(mdp.states_at(h));
    total_states += mdp.states_at(h);
  }
  long combos = 1;
  for (int i = 0; i < total_states; ++i) combos *= mdp.K;
  double best = -1.0;
  for (long c = 0; c < combos; ++c) {
    long rem = c;
    std::vector<IntVector> actions;
    for (int h = 0; h < mdp.H; ++h) {
      IntVector row(sizes[h]);
      for (int x = 0; x < sizes[h]; ++x) {
        row[x] = static_cast<int>(rem % mdp.K);
        rem /= mdp.K;
      }
      actions.push_back(row);
    }
    best = std::max(best, exact_policy_value(mdp, Policy::deterministic(actions, mdp.K), r));
  }
  CHECK(vi.optimal_value == doctest::Approx(best).epsilon(1e-10));
}

TEST_CASE("value iteration rejects rewards outside the unit range") {
  const LatentLowRankMDP mdp = small_env(12);
  RewardFunction bad = zero_reward(mdp);
  bad.tables[0](0, 0) = 1.5;
  CHECK_THROWS_AS(value_iteration(mdp, bad), RewardOutOfRange);
}

TEST_CASE("policy evaluation is consistent with value iteration and dominated by it") {
  const LatentLowRankMDP mdp = random_env(13);
  const RewardFunction r = random_reward(mdp, 14);
  const ValueIterationResult vi = value_iteration(mdp, r);
  CHECK(exact_policy_value(mdp, vi.policy, r) == doctest::Approx(vi.optimal_value).epsilon(1e-12));
  CHECK(exact_policy_value(mdp, Policy::uniform(mdp), zero_reward(mdp)) ==
        doctest::Approx(0.0).epsilon(1e-15));
  RngStream rng(15);
  for (int i = 0; i < 50; ++i) {
    const Policy pi = random_deterministic(mdp, rng);
    CHECK(exact_policy_value(mdp, pi, r) <= vi.optimal_value + 1e-12);
  }
}

TEST_CASE("policy value matches Monte Carlo returns") {
  const LatentLowRankMDP mdp = random_env(16);
  const RewardFunction r = random_reward(mdp, 17);
  const Policy pi = Policy::uniform(mdp);
  const double exact = exact_policy_value(mdp, pi, r);
  const int n = 20000;
  const RngStream root(18);
  double sum = 0.0, sumsq = 0.0;
  for (int i = 0; i < n; ++i) {
    RngStream ep = root.derive(i);
    const Trajectory tr = sample_episode(mdp, pi, ep);
    double ret = 0.0;
    for (int h = 0; h < mdp.H; ++h) ret += r.at(h, tr.states[h], tr.actions[h]);
    sum += ret;
    sumsq += ret * ret;
  }
  const double mean = sum / n;
  const double sd = std::sqrt(std::max(1e-12, sumsq / n - mean * mean));
  CHECK(std::abs(mean - exact) <= 3.0 * sd / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("terminal value iteration agrees with full value iteration on terminal rewards") {
  const LatentLowRankMDP mdp = random_env(19);
  RngStream rng(20);
  for (int h_last = 0; h_last < mdp.H; ++h_last) {
    Matrix table(mdp.states_at(h_last), mdp.K);
    for (int x = 0; x < table.rows(); ++x) {
      for (int a = 0; a < table.cols(); ++a) table(x, a) = rng.uniform();
    }
    const TerminalVIResult tvi = value_iteration_terminal(mdp, h_last, table);
    const RewardFunction r = terminal_reward(mdp, h_last, table, "terminal");
    const ValueIterationResult vi = value_iteration(mdp, r);
    CHECK(tvi.value == doctest::Approx(vi.optimal_value).epsilon(1e-12));
    CHECK(tvi.policy.levels() == h_last + 1);
  }
}

TEST_CASE("uniform mixing makes every latent reachable with probability exactly 1/d") {
  EnvParams p;
  p.uniform_psi = true;
  const LatentLowRankMDP mdp = random_env(21, p);
  const Matrix table = reachability_table(mdp);
  for (int h = 0; h < mdp.H; ++h) {
    for (int z = 0; z < mdp.d; ++z) {
      CHECK(table(h, z) == doctest::Approx(1.0 / mdp.d).epsilon(1e-12));
    }
  }
  CHECK(min_reachability(mdp) == doctest::Approx(1.0 / mdp.d).epsilon(1e-12));
}

TEST_CASE("max state occupancy dominates every policy and starts at init") {
  const LatentLowRankMDP mdp = random_env(22);
  for (int x = 0; x < mdp.states_at(0); ++x) {
    CHECK(max_state_occupancy(mdp, 0, x) == doctest::Approx(mdp.init[x]).epsilon(1e-12));
  }
  RngStream rng(23);
  for (int i = 0; i < 50; ++i) {
    const Policy pi = random_deterministic(mdp, rng);
    for (int h = 0; h <= mdp.H; ++h) {
      const Vector occ = exact_state_occupancy(mdp, pi, h);
      for (int x = 0; x < mdp.states_at(h); ++x) {
        CHECK(occ[x] <= max_state_occupancy(mdp, h, x) + 1e-10);
      }
    }
  }
}

TEST_CASE("appended uniform actions push the mixture occupancy forward") {
  const LatentLowRankMDP mdp = random_env(24);
  RngStream rng(25);
  MixturePolicy rho;
  rho.members = {random_deterministic(mdp, rng), random_deterministic(mdp, rng)};
  rho.base_level = 0;

  const MixturePolicy extended = rho.with_extra(2);
  const Vector direct = exact_state_occupancy(mdp, extended, 2);

  // Manual push-forward: average member occupancy at level 1, then one
  // uniform-action step.
  Vector occ1 = Vector::Zero(mdp.states_at(1));
  for (const Policy& m : rho.members) {
    occ1 += exact_state_occupancy(mdp, m, 1);
  }
  occ1 /= static_cast<double>(rho.members.size());
  Vector pushed = Vector::Zero(mdp.states_at(2));
  for (int x = 0; x < mdp.states_at(1); ++x) {
    for (int a = 0; a < mdp.K; ++a) {
      pushed += (occ1[x] / mdp.K) * mdp.trans_row(1, x, a);
    }
  }
  for (int x = 0; x < mdp.states_at(2); ++x) {
    CHECK(direct[x] == doctest::Approx(pushed[x]).epsilon(1e-12));
  }
}
