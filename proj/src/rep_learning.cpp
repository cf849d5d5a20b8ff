#include "moffle/rep_learning.hpp"

#include <chrono>
#include <limits>

#include "moffle/errors.hpp"
#include "moffle/rng.hpp"

namespace moffle {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Member {
  const FeatureMap* phi_next;
  const RewardFunction* reward;  // null outside GClass
  Matrix avg;                    // |X'| x d'
};

std::vector<Member> enumerate_members(const DiscriminatorFamily& family) {
  family.validate();
  std::vector<Member> out;
  for (const FeatureMap& f : *family.phi_next) {
    if (family.kind == DiscriminatorKind::GClass) {
      for (const RewardFunction& r : *family.rewards) {
        out.push_back({&f, &r, f.action_avg_table()});
      }
    } else {
      out.push_back({&f, nullptr, f.action_avg_table()});
    }
  }
  return out;
}

// Per-next-state discriminator values for the given theta (or coordinate).
Vector member_state_values(const DiscriminatorFamily& family, const Member& m, const Vector& theta,
                           int coord) {
  const int nx = m.phi_next->num_states;
  Vector s(nx);
  switch (family.kind) {
    case DiscriminatorKind::FClipped: {
      s = m.avg * theta;
      for (int i = 0; i < nx; ++i) s[i] = clip(s[i], 0.0, 1.0);
      return s;
    }
    case DiscriminatorKind::FUnclipped:
      return m.avg * theta;
    case DiscriminatorKind::SimplexCoord:
      return m.avg.col(coord);
    case DiscriminatorKind::GClass: {
      const FeatureMap& f = *m.phi_next;
      for (int x = 0; x < nx; ++x) {
        double best = -std::numeric_limits<double>::infinity();
        for (int a = 0; a < f.num_actions; ++a) {
          const double q = m.reward->at(f.level, x, a) + f.row(x, a).dot(theta);
          if (q > best) best = q;
        }
        s[x] = clip(best, 0.0, family.clip_hi);
      }
      return s;
    }
  }
  throw InvalidArgument("unknown discriminator kind");
}

// Variance-corrected gap of candidate phi_idx on targets s.
double corrected_gap(const DesignCache& cache, int phi_idx, const Vector& s, double outer_radius,
                     double correction_radius) {
  const LsqResult fit = cache.fit(phi_idx, s, outer_radius);
  const double own = cache.loss_at(phi_idx, fit.w, s);
  double best = std::numeric_limits<double>::infinity();
  for (size_t p = 0; p < cache.per_phi.size(); ++p) {
    const LsqResult alt = cache.fit(static_cast<int>(p), s, correction_radius);
    const double l = cache.loss_at(static_cast<int>(p), alt.w, s);
    if (l < best) best = l;
  }
  return own - best;
}

Vector project_ball(Vector v, double r) {
  const double n = v.norm();
  if (n > r && n > 0.0) v *= r / n;
  return v;
}

// Residual quadratic form P = (A X')^T (A X') / n from cached statistics.
Matrix residual_quadratic(const DesignCache& cache, int phi_idx, const Matrix& avg,
                          double lambda) {
  const auto& pp = cache.per_phi[phi_idx];
  const Matrix N = avg.transpose() * cache.m_y * avg;
  const Matrix C = pp.b_op * avg;  // X^T X' / n
  Matrix g = pp.gram;
  g.diagonal().array() += lambda;
  const Matrix alpha = Eigen::LDLT<Matrix>(g).solve(C);
  return N - C.transpose() * alpha - alpha.transpose() * C +
         alpha.transpose() * pp.gram * alpha;
}

struct ThetaSearchResult {
  Vector theta;
  int coord = -1;
  double gap = -std::numeric_limits<double>::infinity();
};

// Max of the corrected gap over the member's theta (or coordinate) space.
// Exact for SimplexCoord; elsewhere candidate seeding plus sign-projected
// coordinate ascent, deterministic given the stream.
ThetaSearchResult search_member(const DesignCache& cache, const DiscriminatorFamily& family,
                                const Member& m, int phi_idx, double outer_radius,
                                double correction_radius, int restarts, int ascent_steps,
                                RngStream rng) {
  ThetaSearchResult best;
  const int dp = m.phi_next->d;

  auto eval_theta = [&](const Vector& th) {
    return corrected_gap(cache, phi_idx, member_state_values(family, m, th, -1), outer_radius,
                         correction_radius);
  };

  if (family.kind == DiscriminatorKind::SimplexCoord) {
    for (int c = 0; c < dp; ++c) {
      const double g = corrected_gap(cache, phi_idx, member_state_values(family, m, Vector(), c),
                                     outer_radius, correction_radius);
      if (g > best.gap) {
        best.gap = g;
        best.coord = c;
        best.theta = Vector::Zero(dp);
      }
    }
    return best;
  }

  const double r = family.theta_radius;
  std::vector<Vector> seeds;
  seeds.push_back(Vector::Zero(dp));
  for (int j = 0; j < dp; ++j) {
    Vector e = Vector::Zero(dp);
    e[j] = r;
    seeds.push_back(e);
    seeds.push_back(-e);
  }
  if (family.kind != DiscriminatorKind::GClass) {
    // Ridge best-response directions seed the search well even when clipping
    // makes them inexact.
    const double lambda = 1.0 / std::max(correction_radius, 1e-6);
    const Matrix P = residual_quadratic(cache, phi_idx, m.avg, lambda);
    for (size_t p = 0; p < cache.per_phi.size(); ++p) {
      const Matrix Pt = residual_quadratic(cache, static_cast<int>(p), m.avg, lambda);
      const QuadMax qm = sym_quad_max(P - Pt, r);
      if (qm.argmax.size() == dp && qm.argmax.norm() > 0.0) {
        seeds.push_back(qm.argmax);
        seeds.push_back(-qm.argmax);
      }
    }
  }
  for (int k = 0; k < restarts; ++k) {
    Vector g(dp);
    for (int j = 0; j < dp; ++j) g[j] = rng.normal();
    const double n = g.norm();
    seeds.push_back(n > 0.0 ? Vector(r * g / n) : Vector::Zero(dp));
  }

  for (const Vector& seed : seeds) {
    Vector th = project_ball(seed, r);
    double val = eval_theta(th);
    double step = r / 2.0;
    int stale = 0;
    for (int k = 0; k < ascent_steps; ++k) {
      const int j = k % dp;
      bool improved = false;
      for (double sgn : {1.0, -1.0}) {
        Vector cand = th;
        cand[j] += sgn * step;
        cand = project_ball(std::move(cand), r);
        const double v = eval_theta(cand);
        if (v > val + 1e-15) {
          val = v;
          th = cand;
          improved = true;
          break;
        }
      }
      if (improved) {
        stale = 0;
      } else if (++stale >= dp) {
        step *= 0.5;
        stale = 0;
        if (step < 1e-6 * r) break;
      }
    }
    if (val > best.gap) {
      best.gap = val;
      best.theta = th;
    }
  }
  return best;
}

struct FamilySearchResult {
  double gap = -std::numeric_limits<double>::infinity();
  size_t member = 0;
  ThetaSearchResult theta;
};

FamilySearchResult search_family(const DesignCache& cache, const DiscriminatorFamily& family,
                                 const std::vector<Member>& members, int phi_idx,
                                 double outer_radius, double correction_radius, int restarts,
                                 int ascent_steps, const RngStream& rng) {
  FamilySearchResult out;
  for (size_t mi = 0; mi < members.size(); ++mi) {
    ThetaSearchResult ts =
        search_member(cache, family, members[mi], phi_idx, outer_radius, correction_radius,
                      restarts, ascent_steps, rng.derive(static_cast<std::uint64_t>(mi)));
    if (ts.gap > out.gap) {
      out.gap = ts.gap;
      out.member = mi;
      out.theta = std::move(ts);
    }
  }
  return out;
}

void check_candidates(const std::vector<FeatureMap>& phis, const TransitionDataset& data) {
  if (phis.empty()) throw EmptyClass("no candidate features");
  for (const auto& f : phis) {
    if (f.level != data.level) throw LevelMismatch("candidate level vs dataset");
  }
}

}  // namespace

void DiscriminatorFamily::validate() const {
  if (phi_next == nullptr || phi_next->empty()) throw EmptyClass("family needs next-level features");
  if (kind == DiscriminatorKind::GClass && (rewards == nullptr || rewards->empty())) {
    throw EmptyClass("GClass family needs rewards");
  }
  if (kind != DiscriminatorKind::SimplexCoord && theta_radius <= 0.0) {
    throw InvalidArgument("family theta_radius must be positive");
  }
}

int flo_minmaxmin(const std::vector<FeatureMap>& phis, const DiscriminatorFamily& family,
                  const TransitionDataset& data, const FloOptions& opt, OracleReport* report) {
  const auto t0 = Clock::now();
  check_candidates(phis, data);
  if (opt.outer_radius <= 0.0 || opt.correction_radius <= 0.0) {
    throw InvalidArgument("flo radii must be positive");
  }
  const std::vector<Member> members = enumerate_members(family);
  const DesignCache cache = build_design_cache(data, phis, members[0].phi_next->num_states);
  const RngStream rng = RngStream(opt.search_seed).derive("flo_minmaxmin");

  int best_idx = -1;
  double best_obj = std::numeric_limits<double>::infinity();
  FamilySearchResult best_witness;
  for (size_t p = 0; p < phis.size(); ++p) {
    const FamilySearchResult fs =
        search_family(cache, family, members, static_cast<int>(p), opt.outer_radius,
                      opt.correction_radius, opt.restarts, opt.ascent_steps, rng.derive(p));
    if (fs.gap < best_obj) {
      best_obj = fs.gap;
      best_idx = static_cast<int>(p);
      best_witness = fs;
    }
  }
  if (report != nullptr) {
    report->chosen_index = best_idx;
    report->chosen_label = phis[best_idx].label;
    report->objective = best_obj;
    report->iterations = 1;
    report->exact_search = family.kind == DiscriminatorKind::SimplexCoord;
    report->budget_exhausted = false;
    report->termination = "one_shot";
    WitnessRecord w;
    w.iteration = 1;
    w.phi_label = phis[best_idx].label;
    w.phi_next_label = members[best_witness.member].phi_next->label;
    w.reward_label =
        members[best_witness.member].reward ? members[best_witness.member].reward->label : "";
    w.coord = best_witness.theta.coord;
    w.theta = best_witness.theta.theta;
    w.gap = best_witness.gap;
    report->witnesses = {w};
    report->wall_seconds = seconds_since(t0);
  }
  return best_idx;
}

QuadMax flo_eigen_triple(const Matrix& X, const Matrix& Xtilde, const Matrix& Xnext, double lambda,
                         double theta_radius) {
  if (X.rows() != Xnext.rows() || Xtilde.rows() != Xnext.rows()) {
    throw ShapeMismatch("triple design row counts");
  }
  const double n = static_cast<double>(X.rows());
  const ResidualOperator a(X, lambda);
  const ResidualOperator at(Xtilde, lambda);
  const Matrix ra = a.apply_matrix(Xnext);
  const Matrix rt = at.apply_matrix(Xnext);
  const Matrix M = (ra.transpose() * ra - rt.transpose() * rt) / n;
  return sym_quad_max(M, theta_radius);
}

int flo_eigen(const std::vector<FeatureMap>& phis, const std::vector<FeatureMap>& phi_next,
              const TransitionDataset& data, const FloEigenOptions& opt, OracleReport* report) {
  const auto t0 = Clock::now();
  check_candidates(phis, data);
  if (phi_next.empty()) throw EmptyClass("flo_eigen needs next-level features");
  const int dp = phi_next[0].d;
  const double r = opt.theta_radius > 0.0 ? opt.theta_radius : std::sqrt(static_cast<double>(dp));
  const double lambda = opt.lambda > 0.0 ? opt.lambda : 1.0 / r;
  const DesignCache cache = build_design_cache(data, phis, phi_next[0].num_states);

  std::vector<Matrix> avgs;
  avgs.reserve(phi_next.size());
  for (const auto& f : phi_next) avgs.push_back(f.action_avg_table());

  // P[p][m]: residual quadratic of candidate p against member m's targets.
  std::vector<std::vector<Matrix>> P(phis.size());
  for (size_t p = 0; p < phis.size(); ++p) {
    P[p].reserve(phi_next.size());
    for (const auto& avg : avgs) {
      P[p].push_back(residual_quadratic(cache, static_cast<int>(p), avg, lambda));
    }
  }

  int best_idx = -1;
  double best_obj = std::numeric_limits<double>::infinity();
  WitnessRecord best_w;
  for (size_t p = 0; p < phis.size(); ++p) {
    double obj = -std::numeric_limits<double>::infinity();
    WitnessRecord w;
    for (size_t m = 0; m < phi_next.size(); ++m) {
      for (size_t q = 0; q < phis.size(); ++q) {
        const QuadMax qm = sym_quad_max(P[p][m] - P[q][m], r);
        if (qm.value > obj) {
          obj = qm.value;
          w.phi_next_label = phi_next[m].label;
          w.theta = qm.argmax;
          w.gap = qm.value;
        }
      }
    }
    if (obj < best_obj) {
      best_obj = obj;
      best_idx = static_cast<int>(p);
      best_w = w;
      best_w.phi_label = phis[p].label;
    }
  }
  if (report != nullptr) {
    report->chosen_index = best_idx;
    report->chosen_label = phis[best_idx].label;
    report->objective = best_obj;
    report->iterations = 1;
    report->exact_search = true;
    report->budget_exhausted = false;
    report->termination = "one_shot";
    best_w.iteration = 1;
    report->witnesses = {best_w};
    report->wall_seconds = seconds_since(t0);
  }
  return best_idx;
}

int greedy_select(const std::vector<FeatureMap>& phis, const DiscriminatorFamily& family,
                  const TransitionDataset& data, const GreedyConfig& cfg, OracleReport* report) {
  const auto t0 = Clock::now();
  check_candidates(phis, data);
  if (cfg.eps_tol <= 0.0 || cfg.L <= 0.0 || cfg.d < 1) throw InvalidArgument("greedy config");
  const std::vector<Member> members = enumerate_members(family);
  const DesignCache cache = build_design_cache(data, phis, members[0].phi_next->num_states);
  const RngStream rng = RngStream(cfg.search_seed).derive("greedy");

  const double fit_radius = cfg.L * std::sqrt(static_cast<double>(cfg.d));
  const double threshold = cfg.stop_threshold();
  const int cap = cfg.t_max();

  std::vector<Vector> witnesses;  // accumulated per-state target vectors
  {
    // t=1 seed: the theta = 0 member (first coordinate for the finite family).
    const int coord = family.kind == DiscriminatorKind::SimplexCoord ? 0 : -1;
    const Vector theta0 = Vector::Zero(members[0].phi_next->d);
    witnesses.push_back(member_state_values(family, members[0], theta0, coord));
  }

  int chosen = -1;
  if (report != nullptr) report->witnesses.clear();
  for (int t = 1; t <= cap; ++t) {
    // Fit every candidate against all accumulated witnesses; the matrix
    // constraint decomposes per column, so each witness is its own fit.
    double best_total = std::numeric_limits<double>::infinity();
    chosen = -1;
    for (size_t p = 0; p < phis.size(); ++p) {
      double total = 0.0;
      for (const Vector& s : witnesses) {
        const LsqResult fit = cache.fit(static_cast<int>(p), s, fit_radius);
        total += cache.loss_at(static_cast<int>(p), fit.w, s);
      }
      if (total < best_total) {
        best_total = total;
        chosen = static_cast<int>(p);
      }
    }

    const double bt = cfg.radius_at(t);
    const FamilySearchResult fs =
        search_family(cache, family, members, chosen, bt, fit_radius, cfg.restarts,
                      cfg.ascent_steps, rng.derive(static_cast<std::uint64_t>(t)));

    if (report != nullptr) {
      WitnessRecord w;
      w.iteration = t;
      w.phi_label = phis[chosen].label;
      w.phi_next_label = members[fs.member].phi_next->label;
      w.reward_label = members[fs.member].reward ? members[fs.member].reward->label : "";
      w.coord = fs.theta.coord;
      w.theta = fs.theta.theta;
      w.gap = fs.gap;
      report->witnesses.push_back(std::move(w));
      report->iterations = t;
      report->objective = fs.gap;
    }

    if (fs.gap < threshold) {
      if (report != nullptr) {
        report->termination = "converged";
        report->budget_exhausted = false;
      }
      break;
    }
    if (t == cap) {
      if (report != nullptr) {
        report->termination = "cap";
        report->budget_exhausted = true;
      }
      break;
    }
    witnesses.push_back(
        member_state_values(family, members[fs.member], fs.theta.theta, fs.theta.coord));
  }

  if (report != nullptr) {
    report->chosen_index = chosen;
    report->chosen_label = phis[chosen].label;
    report->exact_search = family.kind == DiscriminatorKind::SimplexCoord;
    report->wall_seconds = seconds_since(t0);
  }
  return chosen;
}

}  // namespace moffle
