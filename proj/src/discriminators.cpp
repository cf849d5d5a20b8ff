#include "moffle/discriminators.hpp"

#include "moffle/errors.hpp"

namespace moffle {

void Discriminator::validate() const {
  if (phi_next == nullptr) throw InvalidArgument("discriminator needs a feature map");
  switch (kind) {
    case DiscriminatorKind::FClipped:
    case DiscriminatorKind::FUnclipped:
      if (theta.size() != phi_next->d) throw DimMismatch("theta size vs feature dim");
      break;
    case DiscriminatorKind::SimplexCoord:
      if (coord < 0 || coord >= phi_next->d) throw CoordOutOfRange("simplex coordinate");
      break;
    case DiscriminatorKind::GClass:
      if (theta.size() != phi_next->d) throw DimMismatch("theta size vs feature dim");
      if (reward == nullptr) throw InvalidArgument("GClass discriminator needs a reward");
      break;
  }
}

double eval_discriminator(const Discriminator& v, int x_next) {
  const FeatureMap& f = *v.phi_next;
  if (x_next < 0 || x_next >= f.num_states) throw InvalidArgument("state id out of range");
  switch (v.kind) {
    case DiscriminatorKind::FClipped: {
      double s = 0.0;
      for (int a = 0; a < f.num_actions; ++a) s += f.row(x_next, a).dot(v.theta);
      return clip(s / f.num_actions, 0.0, 1.0);
    }
    case DiscriminatorKind::FUnclipped: {
      double s = 0.0;
      for (int a = 0; a < f.num_actions; ++a) s += f.row(x_next, a).dot(v.theta);
      return s / f.num_actions;
    }
    case DiscriminatorKind::SimplexCoord: {
      if (v.coord < 0 || v.coord >= f.d) throw CoordOutOfRange("simplex coordinate");
      double s = 0.0;
      for (int a = 0; a < f.num_actions; ++a) s += f.row(x_next, a)[v.coord];
      return s / f.num_actions;
    }
    case DiscriminatorKind::GClass: {
      double best = -1e300;
      for (int a = 0; a < f.num_actions; ++a) {
        const double q = v.reward->at(f.level, x_next, a) + f.row(x_next, a).dot(v.theta);
        if (q > best) best = q;
      }
      return clip(best, 0.0, v.clip_hi);
    }
  }
  throw InvalidArgument("unknown discriminator kind");
}

Vector eval_discriminator_table(const Discriminator& v) {
  v.validate();
  Vector out(v.phi_next->num_states);
  for (int x = 0; x < v.phi_next->num_states; ++x) out[x] = eval_discriminator(v, x);
  return out;
}

Vector eval_targets(const Discriminator& v, const TransitionDataset& data) {
  if (v.phi_next != nullptr && v.phi_next->level != data.level + 1) {
    throw LevelMismatch("discriminator level vs dataset level");
  }
  const Vector table = eval_discriminator_table(v);
  Vector y(data.size());
  for (int i = 0; i < data.size(); ++i) {
    const int x_next = data.rows[i][2];
    if (x_next < 0 || x_next >= table.size()) throw InvalidArgument("dataset next-state id range");
    y[i] = table[x_next];
  }
  return y;
}

double QFunction::eval(int x, int a) const {
  double lin = phi->row(x, a).dot(w);
  if (clip_linear) lin = clip(lin, clip_lo, clip_hi);
  const double r = reward != nullptr ? reward->at(phi->level, x, a) : 0.0;
  return r + lin;
}

Matrix QFunction::table() const {
  Matrix out(phi->num_states, phi->num_actions);
  for (int x = 0; x < phi->num_states; ++x) {
    for (int a = 0; a < phi->num_actions; ++a) out(x, a) = eval(x, a);
  }
  return out;
}

Policy greedy_policy_from_q(const std::vector<Matrix>& q_tables, int num_actions) {
  std::vector<IntVector> actions;
  actions.reserve(q_tables.size());
  for (const auto& q : q_tables) {
    if (q.cols() != num_actions) throw ShapeMismatch("q table action count");
    IntVector acts = IntVector::Zero(q.rows());
    for (int x = 0; x < q.rows(); ++x) {
      int best = 0;
      for (int a = 1; a < num_actions; ++a) {
        if (q(x, a) > q(x, best)) best = a;
      }
      acts[x] = best;
    }
    actions.push_back(std::move(acts));
  }
  return Policy::deterministic(std::move(actions), num_actions);
}

}  // namespace moffle
