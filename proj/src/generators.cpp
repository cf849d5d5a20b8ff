#include "moffle/generators.hpp"

#include <cmath>

#include "moffle/dp.hpp"
#include "moffle/errors.hpp"

namespace moffle {

LatentLowRankMDP generate_env(const EnvParams& params, const RngStream& rng) {
  if (params.max_attempts < 1) throw InvalidArgument("max_attempts must be >= 1");
  std::vector<int> sizes = params.num_states;
  if (sizes.empty()) sizes.assign(params.H + 1, params.states_per_level);
  if (static_cast<int>(sizes.size()) != params.H + 1) {
    throw ShapeMismatch("num_states must cover levels 0..H");
  }

  for (int attempt = 0; attempt < params.max_attempts; ++attempt) {
    RngStream stream = rng.derive(static_cast<std::uint64_t>(attempt));
    std::vector<Matrix> psi(params.H), nu(params.H);
    for (int h = 0; h < params.H; ++h) {
      psi[h] = Matrix(sizes[h] * params.K, params.d);
      for (int r = 0; r < psi[h].rows(); ++r) {
        if (params.uniform_psi) {
          psi[h].row(r).setConstant(1.0 / params.d);
        } else {
          psi[h].row(r) = stream.dirichlet(params.concentration_psi, params.d).transpose();
        }
      }
      nu[h] = Matrix(params.d, sizes[h + 1]);
      for (int z = 0; z < params.d; ++z) {
        nu[h].row(z) = stream.dirichlet(params.concentration_nu, sizes[h + 1]).transpose();
      }
    }
    const Vector init = stream.dirichlet(1.0, sizes[0]);
    LatentLowRankMDP mdp =
        build_from_latent(params.H, params.K, params.d, sizes, std::move(psi), std::move(nu), init);
    if (min_reachability(mdp) >= params.eta_floor) return mdp;
  }
  throw GenerationFailed("no environment reached eta_floor " + std::to_string(params.eta_floor) +
                         " in " + std::to_string(params.max_attempts) + " attempts");
}

namespace {

Matrix permute_columns(const Matrix& m, int rotate) {
  const int d = static_cast<int>(m.cols());
  Matrix out(m.rows(), d);
  for (int c = 0; c < d; ++c) out.col((c + rotate) % d) = m.col(c);
  return out;
}

double linf_gap(const Matrix& a, const Matrix& b) { return (a - b).cwiseAbs().maxCoeff(); }

Matrix random_simplex_rows(long rows, int d, RngStream& stream) {
  Matrix out(rows, d);
  for (long r = 0; r < rows; ++r) out.row(r) = stream.dirichlet(1.0, d).transpose();
  return out;
}

Matrix noisy_remix(const Matrix& base, double weight, RngStream& stream) {
  Matrix out(base.rows(), base.cols());
  for (long r = 0; r < base.rows(); ++r) {
    const Vector noise = stream.dirichlet(1.0, static_cast<int>(base.cols()));
    out.row(r) = (1.0 - weight) * base.row(r) + weight * noise.transpose();
  }
  return out;
}

}  // namespace

FeatureClass generate_feature_class(const LatentLowRankMDP& mdp, const FeatureGenParams& params,
                                    const RngStream& rng) {
  if (params.decoy_count < 0) throw InvalidArgument("decoy_count must be >= 0");
  if (params.kinds.empty()) throw InvalidArgument("kinds must be nonempty");
  FeatureClass out;
  out.levels.resize(mdp.H + 1);
  out.star_index.assign(mdp.H + 1, -1);

  for (int h = 0; h < mdp.H; ++h) {
    RngStream stream = rng.derive("features").derive(h);
    FeatureMap star = feature_map_from_psi(mdp, h, "phi_star_h" + std::to_string(h));
    out.levels[h].push_back(star);
    out.star_index[h] = 0;
    int permute_rotation = 1;
    for (int k = 0; k < params.decoy_count; ++k) {
      const std::string kind = params.kinds[k % params.kinds.size()];
      FeatureMap decoy = star;
      bool placed = false;
      if (kind == "permute" && mdp.d > 1) {
        for (; permute_rotation < mdp.d && !placed; ++permute_rotation) {
          decoy.values = permute_columns(star.values, permute_rotation);
          placed = linf_gap(decoy.values, star.values) > params.min_linf_gap;
        }
      } else if (kind == "simplex" || (kind == "permute" && mdp.d == 1)) {
        for (int tries = 0; tries < 100 && !placed; ++tries) {
          decoy.values = random_simplex_rows(star.values.rows(), mdp.d, stream);
          placed = linf_gap(decoy.values, star.values) > params.min_linf_gap;
        }
      } else if (kind == "noise") {
        for (int tries = 0; tries < 100 && !placed; ++tries) {
          decoy.values = noisy_remix(star.values, params.noise_weight, stream);
          placed = linf_gap(decoy.values, star.values) > params.min_linf_gap;
        }
      } else {
        throw InvalidArgument("unknown decoy kind " + kind);
      }
      if (!placed) {
        // Permutations can collapse onto symmetric canonical maps; fall back
        // to a fresh random member rather than shipping a twin.
        for (int tries = 0; tries < 100 && !placed; ++tries) {
          decoy.values = random_simplex_rows(star.values.rows(), mdp.d, stream);
          placed = linf_gap(decoy.values, star.values) > params.min_linf_gap;
        }
        if (!placed) throw GenerationFailed("could not separate decoy from phi*");
      }
      decoy.label = "decoy_" + kind + "_h" + std::to_string(h) + "_k" + std::to_string(k);
      decoy.validate();
      out.levels[h].push_back(std::move(decoy));
    }
  }

  const int terminal = params.terminal_count > 0 ? params.terminal_count : params.decoy_count + 1;
  RngStream stream_last = rng.derive("features").derive(mdp.H);
  for (int k = 0; k < terminal; ++k) {
    FeatureMap f;
    f.level = mdp.H;
    f.d = mdp.d;
    f.num_states = mdp.states_at(mdp.H);
    f.num_actions = mdp.K;
    f.values = random_simplex_rows(static_cast<long>(f.num_states) * mdp.K, mdp.d, stream_last);
    f.label = "terminal_h" + std::to_string(mdp.H) + "_k" + std::to_string(k);
    f.validate();
    out.levels[mdp.H].push_back(std::move(f));
  }
  out.validate();
  return out;
}

std::vector<RewardFunction> generate_reward_class(const LatentLowRankMDP& mdp, int count,
                                                  const RngStream& rng) {
  if (count < 1) throw InvalidArgument("reward count must be >= 1");
  std::vector<RewardFunction> out;
  out.reserve(count);
  for (int k = 0; k < count; ++k) {
    RngStream stream = rng.derive("rewards").derive(k);
    RewardFunction r;
    r.label = "R" + std::to_string(k);
    for (int h = 0; h < mdp.H; ++h) {
      Matrix t(mdp.states_at(h), mdp.K);
      for (int x = 0; x < t.rows(); ++x) {
        for (int a = 0; a < t.cols(); ++a) t(x, a) = stream.uniform();
      }
      r.tables.push_back(std::move(t));
    }
    r.validate();
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace moffle
