#include "ovtsim/krauss.hpp"

#include <algorithm>

namespace ovtsim {

namespace {
constexpr double kDenomFloor = 1e-6;  // guards v=0, tau_r=0
}

double krauss_free_speed(double v, const KraussParams& p, double v_bar,
                         double dt) {
  double cap = std::min(v_bar, p.v_desired);
  double accel = v + p.a_max * dt;
  return std::max(0.0, std::min(cap, accel));
}

double krauss_safe_speed(double v, double v_lead, double gap,
                         const KraussParams& p, double v_bar, double dt) {
  double cap = std::min(v_bar, p.v_desired);
  double accel = v + p.a_max * dt;
  double denom = std::max(v / p.b_decel + p.tau_r, kDenomFloor);
  double safe = v_lead + (gap - v_lead * p.tau_r) / denom;
  return std::max(0.0, std::min({cap, accel, safe}));
}

double hdv_step(const VehicleState& state,
                const std::optional<VehicleState>& leader,
                const KraussParams& p, double v_bar, double dt,
                std::mt19937_64& rng) {
  double v_s;
  if (leader) {
    double gap = ego_gap(*leader, state) - leader->length;
    v_s = krauss_safe_speed(state.v, leader->v, gap, p, v_bar, dt);
  } else {
    v_s = krauss_free_speed(state.v, p, v_bar, dt);
  }
  if (p.sigma_noise <= 0.0) return v_s;
  std::normal_distribution<double> noise(0.0, p.sigma_noise);
  double eps = noise(rng);
  return std::clamp(v_s + eps, 0.0, v_s);
}

}  // namespace ovtsim
