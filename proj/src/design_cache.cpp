#include "moffle/design_cache.hpp"

#include <cmath>

#include "moffle/errors.hpp"

namespace moffle {

DesignCache build_design_cache(const TransitionDataset& data,
                               const std::vector<FeatureMap>& phis, int num_next_states) {
  if (phis.empty()) throw EmptyClass("design cache needs candidate features");
  if (data.size() == 0) throw MissingLevelData("design cache on empty dataset");
  DesignCache out;
  out.level = data.level;
  out.n = data.size();
  out.num_next = num_next_states;
  out.next_counts = Vector::Zero(num_next_states);
  const double n = static_cast<double>(data.size());

  out.per_phi.resize(phis.size());
  for (size_t p = 0; p < phis.size(); ++p) {
    const FeatureMap& f = phis[p];
    if (f.level != data.level) throw LevelMismatch("feature level vs dataset level");
    out.per_phi[p].gram = Matrix::Zero(f.d, f.d);
    out.per_phi[p].b_op = Matrix::Zero(f.d, num_next_states);
  }
  for (const auto& row : data.rows) {
    const int x = row[0], a = row[1], xn = row[2];
    if (xn < 0 || xn >= num_next_states) throw ShapeMismatch("next-state id out of range");
    out.next_counts[xn] += 1.0;
    for (size_t p = 0; p < phis.size(); ++p) {
      const Vector v = phis[p].row(x, a);
      out.per_phi[p].gram.noalias() += v * v.transpose();
      out.per_phi[p].b_op.col(xn) += v;
    }
  }
  for (auto& pp : out.per_phi) {
    pp.gram /= n;
    pp.b_op /= n;
  }
  out.m_y = Matrix::Zero(num_next_states, num_next_states);
  out.m_y.diagonal() = out.next_counts / n;
  return out;
}

DesignCache build_exact_design_cache(const LatentLowRankMDP& mdp, int level,
                                     const std::vector<FeatureMap>& phis, const Matrix& weights) {
  if (phis.empty()) throw EmptyClass("design cache needs candidate features");
  if (level < 0 || level >= mdp.H) throw LevelMismatch("design cache level");
  if (weights.rows() != mdp.states_at(level) || weights.cols() != mdp.K) {
    throw ShapeMismatch("weight table shape");
  }
  DesignCache out;
  out.level = level;
  out.n = 0;
  out.num_next = mdp.states_at(level + 1);
  out.next_counts = Vector::Zero(out.num_next);
  out.m_y = Matrix::Zero(out.num_next, out.num_next);
  out.per_phi.resize(phis.size());
  for (size_t p = 0; p < phis.size(); ++p) {
    out.per_phi[p].gram = Matrix::Zero(phis[p].d, phis[p].d);
    out.per_phi[p].b_op = Matrix::Zero(phis[p].d, out.num_next);
  }
  for (int x = 0; x < mdp.states_at(level); ++x) {
    for (int a = 0; a < mdp.K; ++a) {
      const double w = weights(x, a);
      if (w < 0.0) throw InvalidArgument("negative weight");
      if (w == 0.0) continue;
      const Vector t = mdp.trans_row(level, x, a);
      out.next_counts += w * t;
      // Targets are conditional means, so y^2 aggregates (t . s)^2 per (x, a).
      out.m_y.noalias() += w * t * t.transpose();
      for (size_t p = 0; p < phis.size(); ++p) {
        const Vector v = phis[p].row(x, a);
        out.per_phi[p].gram.noalias() += w * v * v.transpose();
        out.per_phi[p].b_op.noalias() += w * v * t.transpose();
      }
    }
  }
  return out;
}

}  // namespace moffle
