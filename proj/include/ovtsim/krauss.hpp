#pragma once

#include <optional>
#include <random>

#include "ovtsim/core.hpp"

namespace ovtsim {

struct KraussParams {
  double a_max = 2.6;        // acceleration bound [m/s^2]
  double b_decel = 4.5;      // comfortable deceleration b [m/s^2]
  double tau_r = 1.0;        // driver reaction time [s]
  double sigma_noise = 0.5;  // driver imperfection std [m/s]
  double v_desired = 10.0;   // desired speed [m/s]
};

// Safe following speed: min of speed limit / desired speed, the
// acceleration-limited speed, and the gap-limited safe speed
//   v_lead + (gap - v_lead*tau_r) / (v/b + tau_r),
// clamped below at zero. gap is bumper-to-bumper; pass no leader via the
// overload below when none is in range.
double krauss_safe_speed(double v, double v_lead, double gap,
                         const KraussParams& p, double v_bar, double dt);

// Free-flow variant (no leader): the gap term is dropped.
double krauss_free_speed(double v, const KraussParams& p, double v_bar,
                         double dt);

// One HDV speed update: safe speed plus zero-mean Gaussian driver noise,
// clamped into [0, v_s] so the safety guarantee survives the noise.
// leader, if present, must be the nearest same-lane vehicle ahead.
double hdv_step(const VehicleState& state,
                const std::optional<VehicleState>& leader,
                const KraussParams& p, double v_bar, double dt,
                std::mt19937_64& rng);

}  // namespace ovtsim
