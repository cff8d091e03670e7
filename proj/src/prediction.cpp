#include "ovtsim/prediction.hpp"

#include <algorithm>

#include "ovtsim/core.hpp"

namespace ovtsim {

double fit_slope(std::span<const std::pair<int, double>> history,
                 const PredictionConfig& cfg) {
  std::size_t n = history.size();
  std::size_t use = std::min<std::size_t>(n, cfg.history_window);
  if (static_cast<int>(use) < std::max(cfg.min_samples, 2)) return 0.0;
  auto window = history.subspan(n - use, use);

  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& [tick, v] : window) {
    double x = static_cast<double>(tick);
    sx += x;
    sy += v;
    sxx += x * x;
    sxy += x * v;
  }
  double m = static_cast<double>(use);
  double denom = m * sxx - sx * sx;
  if (denom <= 0.0) return 0.0;  // all samples at one tick
  return (m * sxy - sx * sy) / denom;
}

std::vector<double> predict_velocity(double v_now, double slope,
                                     const PredictionConfig& cfg,
                                     double v_bar) {
  std::vector<double> v;
  v.reserve(cfg.horizon + 1);
  v.push_back(std::clamp(v_now, 0.0, v_bar));
  for (int j = 1; j <= cfg.horizon; ++j) {
    double prev = v.back();
    double next;
    if (j <= cfg.accel_horizon) {
      double step = cfg.literal_ramp ? slope * j : slope;
      next = std::clamp(prev + step, 0.0, v_bar);
    } else {
      next = prev;
    }
    v.push_back(next);
  }
  return v;
}

std::vector<double> predict_position(double s_now, int dir,
                                     std::span<const double> v_hat,
                                     double ts) {
  std::vector<double> s;
  s.reserve(v_hat.size());
  s.push_back(s_now);
  for (std::size_t j = 1; j < v_hat.size(); ++j) {
    s.push_back(advance_state(s.back(), v_hat[j - 1], v_hat[j], dir, ts));
  }
  return s;
}

}  // namespace ovtsim
