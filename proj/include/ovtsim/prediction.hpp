#pragma once

#include <span>
#include <utility>
#include <vector>

namespace ovtsim {

struct PredictionConfig {
  int accel_horizon = 4;    // H_a: steps the fitted slope is extrapolated
  int horizon = 20;         // H_p: total prediction steps
  int history_window = 10;  // samples used for the regression
  int min_samples = 3;      // below this the slope falls back to 0
  bool literal_ramp = false;  // v(j-1) + m*j instead of v(j-1) + m
};

struct PredictedTrajectory {
  int target_id = -1;
  std::vector<double> v_hat;  // indices 0..H_p, magnitudes
  std::vector<double> s_hat;  // indices 0..H_p, global frame
  int dir = +1;
  int lane = 0;               // held constant over the horizon
  double length = 5.0;
};

// Least-squares slope of speed vs. controller tick over the last
// history_window samples; 0 for degenerate histories. Samples are
// (tick, speed) pairs ordered by tick, so the result is already in
// per-controller-step units.
double fit_slope(std::span<const std::pair<int, double>> history,
                 const PredictionConfig& cfg);

// Ramp for accel_horizon steps at the fitted slope, then hold constant;
// clamped into [0, v_bar] throughout.
std::vector<double> predict_velocity(double v_now, double slope,
                                     const PredictionConfig& cfg,
                                     double v_bar);

// Trapezoidal accumulation of the predicted speeds with direction sign.
std::vector<double> predict_position(double s_now, int dir,
                                     std::span<const double> v_hat,
                                     double ts);

}  // namespace ovtsim
