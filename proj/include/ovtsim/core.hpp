#pragma once

namespace ovtsim {

enum class VehicleKind { Hdv, Cav };

// Per-vehicle kinematic and capability record. Positions live on a single
// global s-axis [0, road_length]; speeds are stored as magnitudes with a
// separate direction sign. Lane 0 carries dir=+1 traffic, lane 1 carries
// dir=-1 traffic; a vehicle found in the other lane is mid-overtake.
struct VehicleState {
  int id = -1;
  double s = 0.0;       // longitudinal position [m]
  double v = 0.0;       // speed magnitude [m/s], >= 0
  int dir = +1;         // +1 travels toward increasing s
  int lane = 0;         // physical lane index {0,1}
  double length = 5.0;  // [m]
  double a_max = 4.0;   // [m/s^2]
  double a_min = -9.0;  // [m/s^2], negative
  VehicleKind kind = VehicleKind::Hdv;

  int home_lane() const { return dir > 0 ? 0 : 1; }
  bool in_home_lane() const { return lane == home_lane(); }
  // 0 = travelling in its own lane, 1 = in the opposite-direction lane
  int relative_lane_flag() const { return in_home_lane() ? 0 : 1; }
};

struct RoadConfig {
  double length = 2000.0;          // [m]
  double v_bar = 20.0;             // speed limit [m/s]
  double lane_width = 3.2;         // L_w [m]
  double half_vehicle_width = 0.9; // L_c [m]
};

// Trapezoidal position update over one step of length ts.
inline double advance_state(double s, double v_prev, double v_new, int dir,
                            double ts) {
  return s + dir * 0.5 * (v_prev + v_new) * ts;
}

// Signed longitudinal gap in i's travel direction: > 0 iff p is ahead of i.
inline double ego_gap(const VehicleState& p, const VehicleState& i) {
  return static_cast<double>(i.dir) * (p.s - i.s);
}

enum class RelativeLane { Same, Adjacent };

inline RelativeLane relative_lane(const VehicleState& p,
                                  const VehicleState& i) {
  return p.lane == i.lane ? RelativeLane::Same : RelativeLane::Adjacent;
}

}  // namespace ovtsim
