#include "ovtsim/controller.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

namespace ovtsim {

double safety_margin_const(const SafetyMarginParams& m, double v_bar,
                           double a_max_ego, double ts, double vhat_j,
                           double vhat_prev, bool incoming_lane) {
  double margin = m.m0 + (m.mv / v_bar) * vhat_j +
                  (m.ma / a_max_ego) * std::abs(vhat_j - vhat_prev) / ts;
  if (incoming_lane) margin += (m.ml / v_bar) * vhat_j;
  return margin;
}

double safety_margin(const SafetyMarginParams& m, double v_bar,
                     double a_max_ego, double ts, double vhat_j,
                     double vhat_prev, bool incoming_lane, double ego_speed) {
  double margin = safety_margin_const(m, v_bar, a_max_ego, ts, vhat_j,
                                      vhat_prev, incoming_lane);
  if (incoming_lane) margin += (m.ml / v_bar) * ego_speed;
  return margin;
}

double MiqpProblem::margin_const(int vi, int j) const {
  const NeighborData& nb = neighbors[vi];
  return safety_margin_const(margins, v_bar, a_max, ts, nb.v_hat[j],
                             nb.v_hat[j - 1], nb.incoming_lane);
}

MiqpProblem build_problem(const VehicleState& ego,
                          std::span<const PredictedTrajectory> tracks,
                          const RoadConfig& road, const ControllerConfig& cfg) {
  if (tracks.size() > 6)
    throw std::invalid_argument("build_problem: more than 6 tracks");
  MiqpProblem p;
  p.H = cfg.horizon;
  p.ts = cfg.ts;
  p.v0 = ego.v;
  p.d0 = ego.relative_lane_flag();
  p.s0 = ego.s;
  p.ego_dir = ego.dir;
  p.ego_home_lane = ego.home_lane();
  p.v_bar = road.v_bar;
  p.a_max = ego.a_max;
  p.a_min = ego.a_min;
  p.weights = cfg.weights;
  p.margins = cfg.margins;
  p.n0 = p.n1 = p.n2 = cfg.big_m;

  for (const auto& t : tracks) {
    if (static_cast<int>(t.v_hat.size()) < p.H + 1 ||
        static_cast<int>(t.s_hat.size()) < p.H + 1)
      throw std::invalid_argument(
          "build_problem: track prediction shorter than the horizon");
    NeighborData nb;
    nb.target_id = t.target_id;
    nb.incoming_lane = (t.lane != ego.home_lane());
    nb.length = t.length;
    nb.z_hat.resize(p.H + 1);
    nb.v_hat.resize(p.H + 1);
    for (int j = 0; j <= p.H; ++j) {
      nb.z_hat[j] = ego.dir * (t.s_hat[j] - ego.s);
      nb.v_hat[j] = t.v_hat[j];
    }
    p.neighbors.push_back(std::move(nb));
  }
  return p;
}

QpInstance MiqpProblem::to_qp(bool with_fixing) const {
  const int nv = num_vars();
  const int V = static_cast<int>(neighbors.size());
  const double g3 = weights.gamma3;
  const double w_full = ts;        // position weight of interior commands
  const double w_half = 0.5 * ts;  // position weight of the step's command
  const double sigma0 = 0.5 * ts * v0;

  QpInstance qp;
  qp.Q = Eigen::MatrixXd::Zero(nv, nv);
  qp.c = Eigen::VectorXd::Zero(nv);
  qp.lb = Eigen::VectorXd::Zero(nv);
  qp.ub = Eigen::VectorXd::Ones(nv);

  for (int j = 1; j <= H; ++j) {
    int uj = u_index(j);
    qp.lb[uj] = 0.0;
    qp.ub[uj] = v_bar;
    qp.c[uj] = -weights.gamma1;
    qp.c[d_index(j)] = weights.gamma2;
    qp.binaries.push_back(d_index(j));
  }
  for (int vi = 0; vi < V; ++vi)
    for (int j = 1; j <= H; ++j) qp.binaries.push_back(ab_index(vi, j));

  // smoothness: gamma3 * sum_j (u(j) - u(j-1))^2 with u(0) = v0
  if (g3 > 0.0) {
    for (int j = 1; j <= H; ++j) {
      int uj = u_index(j);
      qp.Q(uj, uj) += 2.0 * g3;
      if (j == 1) {
        qp.c[uj] += -2.0 * g3 * v0;
        qp.c0 += g3 * v0 * v0;
      } else {
        int up = u_index(j - 1);
        qp.Q(up, up) += 2.0 * g3;
        qp.Q(uj, up) -= 2.0 * g3;
        qp.Q(up, uj) -= 2.0 * g3;
      }
    }
  }

  std::vector<Eigen::VectorXd> rows;
  std::vector<double> rhs;
  auto add_row = [&](Eigen::VectorXd&& a, double b) {
    rows.push_back(std::move(a));
    rhs.push_back(b);
  };

  // acceleration bounds on consecutive commands
  for (int j = 1; j <= H; ++j) {
    Eigen::VectorXd lo = Eigen::VectorXd::Zero(nv);
    lo[u_index(j)] = 1.0;
    double lo_rhs = a_min * ts;
    Eigen::VectorXd hi = Eigen::VectorXd::Zero(nv);
    hi[u_index(j)] = -1.0;
    double hi_rhs = -a_max * ts;
    if (j == 1) {
      lo_rhs += v0;
      hi_rhs -= v0;
    } else {
      lo[u_index(j - 1)] = -1.0;
      hi[u_index(j - 1)] = 1.0;
    }
    add_row(std::move(lo), lo_rhs);
    add_row(std::move(hi), hi_rhs);
  }

  // ego-frame position coefficients: sigma(j) = sigma0 + sum w_t u(t)
  auto add_sigma = [&](Eigen::VectorXd& a, int j, double sign) {
    for (int t = 1; t < j; ++t) a[u_index(t)] += sign * w_full;
    a[u_index(j)] += sign * w_half;
  };

  for (int vi = 0; vi < V; ++vi) {
    const NeighborData& nb = neighbors[vi];
    for (int j = 1; j <= H; ++j) {
      double lm = nb.length + margin_const(vi, j);
      double zj = nb.z_hat[j];
      int ab = ab_index(vi, j);
      int dj = d_index(j);
      if (!nb.incoming_lane) {
        // active while the ego plans its original lane (D = 0)
        Eigen::VectorXd r1 = Eigen::VectorXd::Zero(nv);
        add_sigma(r1, j, -1.0);
        r1[ab] = n0;
        r1[dj] = n1;
        add_row(std::move(r1), lm - zj + sigma0);

        Eigen::VectorXd r2 = Eigen::VectorXd::Zero(nv);
        add_sigma(r2, j, 1.0);
        r2[ab] = -n0;
        r2[dj] = n1;
        add_row(std::move(r2), zj + lm - n0 - sigma0);
      } else {
        // active while the ego plans the incoming lane (D = 1); the
        // closing-rate margin keeps its u(j) term on the left-hand side
        double mlv = margins.ml / v_bar;
        Eigen::VectorXd r3 = Eigen::VectorXd::Zero(nv);
        add_sigma(r3, j, -1.0);
        r3[u_index(j)] -= mlv;
        r3[ab] = n0;
        r3[dj] = -n2;
        add_row(std::move(r3), lm - zj - n2 + sigma0);

        Eigen::VectorXd r4 = Eigen::VectorXd::Zero(nv);
        add_sigma(r4, j, 1.0);
        r4[u_index(j)] -= mlv;
        r4[ab] = -n0;
        r4[dj] = -n2;
        add_row(std::move(r4), zj + lm - n0 - n2 - sigma0);
      }
    }
  }

  qp.A.resize(rows.size(), nv);
  qp.b.resize(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    qp.A.row(i) = rows[i].transpose();
    qp.b[i] = rhs[i];
  }

  if (with_fixing) {
    // reachable command and position envelopes
    std::vector<double> u_hi(H + 1), u_lo(H + 1), s_hi(H + 1), s_lo(H + 1);
    u_hi[0] = u_lo[0] = v0;
    s_hi[0] = s_lo[0] = 0.0;
    for (int j = 1; j <= H; ++j) {
      u_hi[j] = std::min(v_bar, u_hi[j - 1] + a_max * ts);
      u_lo[j] = std::max(0.0, u_lo[j - 1] + a_min * ts);
      s_hi[j] = s_hi[j - 1] + 0.5 * ts * (u_hi[j - 1] + u_hi[j]);
      s_lo[j] = s_lo[j - 1] + 0.5 * ts * (u_lo[j - 1] + u_lo[j]);
    }
    const double pad = 1e-7;
    bool conflict = false;
    for (int vi = 0; vi < V; ++vi) {
      const NeighborData& nb = neighbors[vi];
      double mlv = nb.incoming_lane ? margins.ml / v_bar : 0.0;
      for (int j = 1; j <= H; ++j) {
        double lm = nb.length + margin_const(vi, j);
        double zj = nb.z_hat[j];
        bool can_behind, can_ahead;
        if (!nb.incoming_lane) {
          can_behind = zj - s_lo[j] >= lm - pad;
          can_ahead = s_hi[j] - zj >= lm - pad;
        } else {
          can_behind = zj - s_lo[j] - mlv * u_lo[j] >= lm - pad;
          double u_drop = std::max(0.0, u_hi[j - 1] + a_min * ts);
          double s_drop = s_hi[j - 1] + 0.5 * ts * (u_hi[j - 1] + u_drop);
          double best_ahead = std::max(s_hi[j] - mlv * u_hi[j],
                                       s_drop - mlv * u_drop);
          can_ahead = best_ahead - zj >= lm - pad;
        }
        int ab = ab_index(vi, j);
        if (can_behind && !can_ahead) {
          qp.lb[ab] = qp.ub[ab] = 0.0;
        } else if (!can_behind && can_ahead) {
          qp.lb[ab] = qp.ub[ab] = 1.0;
        } else if (!can_behind && !can_ahead) {
          // this neighbor cannot be cleared at step j in its lane class
          int dj = d_index(j);
          if (!nb.incoming_lane)
            qp.lb[dj] = 1.0;  // must be in the incoming lane
          else
            qp.ub[dj] = 0.0;  // must be in the original lane
          if (qp.lb[dj] > qp.ub[dj]) conflict = true;
        }
      }
    }
    if (conflict) {
      // no lane assignment satisfies the margins; make the infeasibility
      // explicit for the solver
      qp.lb[d_index(1)] = 1.0;
      qp.ub[d_index(1)] = 0.0;
    }
  }
  return qp;
}

PlanResult plan(const VehicleState& ego,
                std::span<const PredictedTrajectory> tracks,
                const RoadConfig& road, const ControllerConfig& cfg,
                WarmCache* warm) {
  MiqpProblem prob = build_problem(ego, tracks, road, cfg);
  QpInstance qp = prob.to_qp(cfg.presolve_fixing);
  const int H = prob.H;

  Eigen::VectorXd hint;
  bool have_hint = false;
  if (warm && warm->valid && static_cast<int>(warm->d_star.size()) == H &&
      static_cast<int>(warm->u_star.size()) == H) {
    hint = Eigen::VectorXd::Zero(qp.num_vars());
    // shift the previous plan by one step, repeating the tail
    std::vector<double> u_shift(H), d_shift(H);
    for (int j = 1; j <= H; ++j) {
      int src = std::min(j, H - 1);  // previous step j+1
      u_shift[j - 1] = warm->u_star[src];
      d_shift[j - 1] = warm->d_star[src];
    }
    double sigma = 0.0, u_prev = prob.v0;
    for (int j = 1; j <= H; ++j) {
      sigma += 0.5 * prob.ts * (u_prev + u_shift[j - 1]);
      u_prev = u_shift[j - 1];
      hint[prob.u_index(j)] = u_shift[j - 1];
      hint[prob.d_index(j)] = d_shift[j - 1];
      for (int vi = 0; vi < static_cast<int>(prob.neighbors.size()); ++vi) {
        // side flag consistent with the shifted ego trajectory
        hint[prob.ab_index(vi, j)] =
            prob.neighbors[vi].z_hat[j] <= sigma ? 1.0 : 0.0;
      }
    }
    have_hint = true;
  }

  MiqpSolution sol =
      solve_miqp(qp, cfg.solver, have_hint ? &hint : nullptr);

  PlanResult out;
  out.status = sol.status;
  out.solve_time_ms = sol.solve_time_ms;
  out.nodes = sol.nodes;

  if (!sol.has_solution()) {
    out.fallback = true;
    out.u_next = std::max(0.0, ego.v + ego.a_min * cfg.ts);
    out.lane_decision = ego.lane;
    if (warm) warm->valid = false;
    return out;
  }

  out.objective = sol.objective;
  out.u_star.resize(H);
  out.d_star.resize(H);
  for (int j = 1; j <= H; ++j) {
    out.u_star[j - 1] = sol.x[prob.u_index(j)];
    out.d_star[j - 1] = std::round(sol.x[prob.d_index(j)]);
  }
  double lo = std::max(0.0, ego.v + ego.a_min * cfg.ts);
  double hi = std::min(road.v_bar, ego.v + ego.a_max * cfg.ts);
  out.u_next = std::clamp(out.u_star[0], lo, hi);
  int d1 = static_cast<int>(out.d_star[0]);
  out.lane_decision =
      (d1 == 0) ? prob.ego_home_lane : 1 - prob.ego_home_lane;

  if (warm) {
    warm->valid = true;
    warm->u_star = out.u_star;
    warm->d_star = out.d_star;
  }
  return out;
}

void dump_instance(const MiqpProblem& prob, const QpInstance& qp,
                   std::ostream& os) {
  const int nv = qp.num_vars();
  auto var_name = [&](int idx) {
    if (idx < prob.H) return "u" + std::to_string(idx + 1);
    if (idx < 2 * prob.H) return "D" + std::to_string(idx - prob.H + 1);
    int rel = idx - 2 * prob.H;
    int vi = rel / prob.H;
    int j = rel % prob.H + 1;
    return "ab_" + std::to_string(prob.neighbors[vi].target_id) + "_" +
           std::to_string(j);
  };
  os << "# miqp instance: minimize 0.5 x'Qx + c'x + c0, rows a'x >= b\n";
  os << "horizon " << prob.H << " ts " << prob.ts << " v0 " << prob.v0
     << " d0 " << prob.d0 << " s0 " << prob.s0 << "\n";
  os << "vars " << nv << "\n";
  for (int j = 0; j < nv; ++j) {
    os << "var " << var_name(j) << " lb " << qp.lb[j] << " ub " << qp.ub[j];
    bool is_bin = false;
    for (int bidx : qp.binaries) is_bin |= (bidx == j);
    if (is_bin) os << " binary";
    os << "\n";
  }
  os << "c0 " << qp.c0 << "\n";
  for (int j = 0; j < nv; ++j)
    if (qp.c[j] != 0.0) os << "c " << var_name(j) << " " << qp.c[j] << "\n";
  for (int a = 0; a < nv; ++a)
    for (int b = a; b < nv; ++b)
      if (qp.Q(a, b) != 0.0)
        os << "Q " << var_name(a) << " " << var_name(b) << " " << qp.Q(a, b)
           << "\n";
  os << "rows " << qp.num_rows() << "\n";
  for (int i = 0; i < qp.num_rows(); ++i) {
    os << "row";
    for (int j = 0; j < nv; ++j)
      if (qp.A(i, j) != 0.0) os << " " << var_name(j) << " " << qp.A(i, j);
    os << " >= " << qp.b[i] << "\n";
  }
}

}  // namespace ovtsim
