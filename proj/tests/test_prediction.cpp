#include <doctest.h>

#include <random>
#include <vector>

#include "ovtsim/prediction.hpp"

using namespace ovtsim;

namespace {

std::vector<std::pair<int, double>> history_of(std::vector<double> vs,
                                               int first_tick = 0) {
  std::vector<std::pair<int, double>> h;
  for (std::size_t i = 0; i < vs.size(); ++i)
    h.emplace_back(first_tick + static_cast<int>(i), vs[i]);
  return h;
}

// closed-form least squares, written independently of fit_slope
double ls_slope(const std::vector<std::pair<int, double>>& h) {
  double n = static_cast<double>(h.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (auto& [t, v] : h) {
    sx += t;
    sy += v;
    sxx += double(t) * t;
    sxy += t * v;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace

TEST_CASE("fit_slope recovers the least-squares slope") {
  PredictionConfig cfg;
  auto h = history_of({9.0, 9.5, 10.0, 10.5});
  CHECK(fit_slope(h, cfg) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(fit_slope(h, cfg) == doctest::Approx(ls_slope(h)).epsilon(1e-12));
}

TEST_CASE("fit_slope degenerate histories") {
  PredictionConfig cfg;
  auto flat = history_of({10, 10, 10});
  CHECK(fit_slope(flat, cfg) == doctest::Approx(0.0));
  auto one = history_of({10});
  CHECK(fit_slope(one, cfg) == doctest::Approx(0.0));
  auto two = history_of({10, 11});  // below min_samples = 3
  CHECK(fit_slope(two, cfg) == doctest::Approx(0.0));
}

TEST_CASE("fit_slope uses only the trailing window") {
  PredictionConfig cfg;
  cfg.history_window = 4;
  // junk followed by a clean ramp
  auto h = history_of({0.0, 17.0, 3.0, 9.0, 9.5, 10.0, 10.5});
  auto tail = history_of({9.0, 9.5, 10.0, 10.5}, 3);
  CHECK(fit_slope(h, cfg) == doctest::Approx(ls_slope(tail)).epsilon(1e-12));
}

TEST_CASE("fit_slope invariances") {
  PredictionConfig cfg;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int k = 0; k < 50; ++k) {
    std::vector<double> vs;
    for (int i = 0; i < 8; ++i) vs.push_back(10 + u(rng));
    auto h = history_of(vs);
    double m = fit_slope(h, cfg);
    for (auto& [t, v] : h) v += 3.7;  // constant shift
    CHECK(fit_slope(h, cfg) == doctest::Approx(m).epsilon(1e-9));
  }
  // exact ramp v(t) = v0 + a * (t*Ts) sampled per controller step
  double a = 0.8, ts = 0.5, v0 = 5.0;
  std::vector<double> ramp;
  for (int t = 0; t < 10; ++t) ramp.push_back(v0 + a * ts * t);
  CHECK(fit_slope(history_of(ramp), cfg) ==
        doctest::Approx(a * ts).epsilon(1e-9));
}

TEST_CASE("fit_slope handles gapped ticks") {
  PredictionConfig cfg;
  std::vector<std::pair<int, double>> h = {
      {0, 10.0}, {1, 10.5}, {4, 12.0}, {5, 12.5}};  // same line, gap in ticks
  CHECK(fit_slope(h, cfg) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("predict_velocity ramp then hold") {
  PredictionConfig cfg;
  cfg.accel_horizon = 4;
  cfg.horizon = 8;
  auto v = predict_velocity(10.5, 0.5, cfg, 20.0);
  std::vector<double> expect = {10.5, 11.0, 11.5, 12.0, 12.5,
                                12.5, 12.5, 12.5, 12.5};
  REQUIRE(v.size() == expect.size());
  for (std::size_t i = 0; i < v.size(); ++i)
    CHECK(v[i] == doctest::Approx(expect[i]));
}

TEST_CASE("predict_velocity zero slope holds speed") {
  PredictionConfig cfg;
  auto v = predict_velocity(13.0, 0.0, cfg, 20.0);
  for (double x : v) CHECK(x == doctest::Approx(13.0));
}

TEST_CASE("predict_velocity saturates at the speed limit") {
  PredictionConfig cfg;
  cfg.accel_horizon = 4;
  cfg.horizon = 8;
  auto v = predict_velocity(19.0, 1.0, cfg, 20.0);
  CHECK(v[0] == doctest::Approx(19.0));
  for (std::size_t j = 1; j < v.size(); ++j)
    CHECK(v[j] == doctest::Approx(20.0));
}

TEST_CASE("predict_velocity clamps below at zero") {
  PredictionConfig cfg;
  cfg.accel_horizon = 6;
  cfg.horizon = 8;
  auto v = predict_velocity(2.0, -1.0, cfg, 20.0);
  for (double x : v) CHECK(x >= 0.0);
  CHECK(v[4] == doctest::Approx(0.0));
}

TEST_CASE("predict_velocity literal ramp variant") {
  PredictionConfig cfg;
  cfg.accel_horizon = 3;
  cfg.horizon = 4;
  cfg.literal_ramp = true;
  auto v = predict_velocity(10.0, 0.5, cfg, 20.0);
  // v(j) = v(j-1) + m*j: 10, 10.5, 11.5, 13, then hold
  std::vector<double> expect = {10.0, 10.5, 11.5, 13.0, 13.0};
  REQUIRE(v.size() == expect.size());
  for (std::size_t i = 0; i < v.size(); ++i)
    CHECK(v[i] == doctest::Approx(expect[i]));
}

TEST_CASE("v_hat monotone over the ramp, constant after") {
  PredictionConfig cfg;
  cfg.accel_horizon = 5;
  cfg.horizon = 12;
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  for (int k = 0; k < 50; ++k) {
    double m = u(rng);
    auto v = predict_velocity(10.0, m, cfg, 20.0);
    for (int j = 1; j <= cfg.accel_horizon; ++j) {
      if (m >= 0)
        CHECK(v[j] >= v[j - 1] - 1e-12);
      else
        CHECK(v[j] <= v[j - 1] + 1e-12);
    }
    for (int j = cfg.accel_horizon + 1; j <= cfg.horizon; ++j)
      CHECK(v[j] == doctest::Approx(v[cfg.accel_horizon]));
  }
}

TEST_CASE("predict_position trapezoid") {
  std::vector<double> v = {10, 12};
  auto s = predict_position(0, +1, v, 0.5);
  REQUIRE(s.size() == 2);
  CHECK(s[0] == doctest::Approx(0.0));
  CHECK(s[1] == doctest::Approx(5.5));

  std::vector<double> w = {10, 10};
  auto r = predict_position(1000, -1, w, 0.5);
  CHECK(r[1] == doctest::Approx(995.0));
}

TEST_CASE("predict_position constant speed distance") {
  std::vector<double> v(21, 10.0);
  auto s = predict_position(0, +1, v, 0.5);
  CHECK(s.back() == doctest::Approx(100.0));
}

TEST_CASE("constant-velocity target is predicted exactly") {
  PredictionConfig cfg;
  cfg.horizon = 20;
  auto v = predict_velocity(14.0, 0.0, cfg, 20.0);
  auto s = predict_position(500.0, -1, v, 0.5);
  for (int j = 0; j <= 20; ++j)
    CHECK(s[j] == doctest::Approx(500.0 - 14.0 * 0.5 * j).epsilon(1e-12));
}
