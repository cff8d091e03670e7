#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include "ovtsim/bnb.hpp"
#include "ovtsim/core.hpp"
#include "ovtsim/prediction.hpp"

namespace ovtsim {

struct ControllerWeights {
  double gamma1 = 1.0;  // velocity maximization
  double gamma2 = 5.0;  // time spent in the incoming lane
  double gamma3 = 0.5;  // velocity smoothness
};

struct SafetyMarginParams {
  double m0 = 10.0;  // nominal gap [m]
  double mv = 5.0;   // velocity factor [m]
  double ma = 5.0;   // acceleration factor [m]
  double ml = 10.0;  // closing-rate factor, incoming lane only [m]
};

struct ControllerConfig {
  int horizon = 20;  // steps of ts
  double ts = 0.5;
  ControllerWeights weights;
  SafetyMarginParams margins;
  double big_m = 1e4;  // N0 = N1 = N2
  bool presolve_fixing = true;
  BnbConfig solver;
};

// Margin terms independent of the ego command; the incoming-lane closing
// term contributes (ml/v_bar)*vhat here and keeps its (ml/v_bar)*u part
// linear inside the constraint rows.
double safety_margin_const(const SafetyMarginParams& m, double v_bar,
                           double a_max_ego, double ts, double vhat_j,
                           double vhat_prev, bool incoming_lane);

// Full margin for a known ego speed (reference and test use).
double safety_margin(const SafetyMarginParams& m, double v_bar,
                     double a_max_ego, double ts, double vhat_j,
                     double vhat_prev, bool incoming_lane, double ego_speed);

// One tracked vehicle as the optimizer sees it: predicted positions in the
// ego frame (positive ahead of the ego) and speed magnitudes.
struct NeighborData {
  int target_id = -1;
  bool incoming_lane = false;  // true: in the ego's incoming-lane class
  double length = 5.0;
  std::vector<double> z_hat;  // indices 0..H
  std::vector<double> v_hat;  // indices 0..H
};

struct MiqpProblem {
  int H = 20;
  double ts = 0.5;
  double v0 = 0.0;  // ego speed at the tick
  int d0 = 0;       // ego relative-lane flag at the tick
  double s0 = 0.0;  // ego global position (bookkeeping only)
  int ego_dir = +1;
  int ego_home_lane = 0;
  double v_bar = 20.0, a_max = 4.0, a_min = -9.0;
  ControllerWeights weights;
  SafetyMarginParams margins;
  double n0 = 1e4, n1 = 1e4, n2 = 1e4;
  std::vector<NeighborData> neighbors;

  int num_vars() const {
    return 2 * H + H * static_cast<int>(neighbors.size());
  }
  // j runs 1..H throughout
  int u_index(int j) const { return j - 1; }
  int d_index(int j) const { return H + j - 1; }
  int ab_index(int vehicle, int j) const { return 2 * H + vehicle * H + j - 1; }

  // margin of neighbor vi at step j, command-independent part
  double margin_const(int vi, int j) const;

  // Assemble the solver instance. with_fixing pins a/b binaries (and D
  // steps) that no reachable ego trajectory can flip, which is what keeps
  // node counts small at simulation scale.
  QpInstance to_qp(bool with_fixing) const;
};

MiqpProblem build_problem(const VehicleState& ego,
                          std::span<const PredictedTrajectory> tracks,
                          const RoadConfig& road, const ControllerConfig& cfg);

struct PlanResult {
  double u_next = 0.0;
  int lane_decision = 0;  // physical lane for the coming period
  MiqpStatus status = MiqpStatus::Infeasible;
  bool fallback = false;
  double objective = 0.0;
  double solve_time_ms = 0.0;
  long nodes = 0;
  std::vector<double> u_star, d_star;  // 1..H; empty on fallback
};

// Shifted previous solution, used to seed the next tick's incumbent.
struct WarmCache {
  bool valid = false;
  std::vector<double> u_star, d_star;
};

PlanResult plan(const VehicleState& ego,
                std::span<const PredictedTrajectory> tracks,
                const RoadConfig& road, const ControllerConfig& cfg,
                WarmCache* warm = nullptr);

// Text dump of an assembled instance for external cross-checking.
void dump_instance(const MiqpProblem& prob, const QpInstance& qp,
                   std::ostream& os);

}  // namespace ovtsim
