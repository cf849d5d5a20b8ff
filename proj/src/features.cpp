#include "moffle/features.hpp"

#include <cmath>

#include "moffle/errors.hpp"

namespace moffle {

Vector FeatureMap::action_avg(int x) const {
  Vector out = Vector::Zero(d);
  for (int a = 0; a < num_actions; ++a) out += row(x, a);
  return out / num_actions;
}

Matrix FeatureMap::action_avg_table() const {
  Matrix out(num_states, d);
  for (int x = 0; x < num_states; ++x) out.row(x) = action_avg(x).transpose();
  return out;
}

void FeatureMap::validate() const {
  if (d < 1 || num_states < 1 || num_actions < 1) throw ShapeMismatch("feature map dims");
  if (values.rows() != static_cast<long>(num_states) * num_actions || values.cols() != d) {
    throw ShapeMismatch("feature table shape for " + label);
  }
  for (int r = 0; r < values.rows(); ++r) {
    if (values.row(r).norm() > 1.0 + 1e-9) {
      throw ShapeMismatch("feature row norm > 1 in " + label);
    }
  }
}

FeatureMap feature_map_from_psi(const LatentLowRankMDP& mdp, int h, const std::string& label) {
  if (h < 0 || h >= mdp.H) throw LevelMismatch("phi* level out of range");
  FeatureMap f;
  f.level = h;
  f.d = mdp.d;
  f.num_states = mdp.states_at(h);
  f.num_actions = mdp.K;
  f.values = mdp.psi[h];
  f.label = label;
  return f;
}

int FeatureClass::count(int h) const {
  if (h < 0 || h >= num_levels()) throw LevelMismatch("feature class has no level " + std::to_string(h));
  return static_cast<int>(levels[h].size());
}

const FeatureMap& FeatureClass::at(int h, int i) const {
  if (h < 0 || h >= num_levels()) throw LevelMismatch("feature class has no level " + std::to_string(h));
  if (i < 0 || i >= count(h)) throw InvalidArgument("feature index out of range");
  return levels[h][i];
}

const std::vector<FeatureMap>& FeatureClass::level(int h) const {
  if (h < 0 || h >= num_levels()) throw LevelMismatch("feature class has no level " + std::to_string(h));
  return levels[h];
}

void FeatureClass::validate() const {
  if (levels.empty()) throw EmptyClass("feature class has no levels");
  if (star_index.size() != levels.size()) throw ShapeMismatch("star_index size");
  for (int h = 0; h < num_levels(); ++h) {
    if (levels[h].empty()) throw EmptyClass("feature class empty at level " + std::to_string(h));
    const int d0 = levels[h][0].d;
    for (const auto& f : levels[h]) {
      f.validate();
      if (f.level != h) throw LevelMismatch("feature map level tag mismatch");
      if (f.d != d0) throw DimMismatch("mixed feature dims within a level");
    }
    if (star_index[h] >= count(h)) throw InvalidArgument("star_index out of range");
  }
}

double RewardFunction::at(int h, int x, int a) const {
  if (h < 0) throw LevelMismatch("reward level < 0");
  if (h >= levels()) return 0.0;
  return tables[h](x, a);
}

void RewardFunction::validate() const {
  for (const auto& t : tables) {
    for (int r = 0; r < t.rows(); ++r) {
      for (int c = 0; c < t.cols(); ++c) {
        if (t(r, c) < -kRewardRangeTol || t(r, c) > 1.0 + kRewardRangeTol) {
          throw RewardOutOfRange("reward entry " + std::to_string(t(r, c)) + " in " + label);
        }
      }
    }
  }
}

RewardFunction zero_reward(const LatentLowRankMDP& mdp) {
  RewardFunction r;
  r.label = "zero";
  r.tables.reserve(mdp.H);
  for (int h = 0; h < mdp.H; ++h) r.tables.push_back(Matrix::Zero(mdp.states_at(h), mdp.K));
  return r;
}

RewardFunction terminal_reward(const LatentLowRankMDP& mdp, int level, Matrix table,
                               const std::string& label) {
  if (level < 0 || level >= mdp.H) throw LevelMismatch("terminal reward level");
  if (table.rows() != mdp.states_at(level) || table.cols() != mdp.K) {
    throw ShapeMismatch("terminal reward table shape");
  }
  RewardFunction r = zero_reward(mdp);
  r.tables[level] = std::move(table);
  r.label = label;
  return r;
}

}  // namespace moffle
