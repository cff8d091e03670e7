#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "ovtsim/controller.hpp"
#include "ovtsim/core.hpp"
#include "ovtsim/krauss.hpp"
#include "ovtsim/perception.hpp"
#include "ovtsim/prediction.hpp"

namespace ovtsim {

enum class InfoMode { Cooperative, SingleAgent, GlobalInfo };

std::string to_string(InfoMode mode);
std::optional<InfoMode> info_mode_from_string(const std::string& s);

struct HdvConfig {
  double a_max = 2.6;
  double b_decel = 4.5;
  double tau_r = 1.0;
  double sigma_noise = 0.5;
  double v_desired_mean = 10.0;
  double v_desired_std = 1.5;
  double v_desired_min = 5.0;
  double length = 5.0;
};

struct CavConfig {
  double length = 5.0;
  double a_max = 4.0;
  double a_min = -9.0;
};

struct ScenarioConfig {
  RoadConfig road;
  double sim_step = 0.1;
  double controller_period = 0.5;
  double duration = 3600.0;
  double flow_rate = 6.0;  // vehicles/minute per direction
  double cav_penetration = 0.4;
  InfoMode info_mode = InfoMode::Cooperative;
  std::uint64_t seed = 1;
  HdvConfig hdv;
  CavConfig cav;
  SensorConfig sensor;
  PredictionConfig prediction;
  ControllerConfig controller;
  bool log_trajectory = true;
  std::string dump_miqp_path;  // first assembled instance, when set

  int steps_per_tick() const;
  long total_steps() const;
};

struct MetricsRecord {
  std::map<int, long> attempts_by_cav;
  std::map<int, long> successes_by_cav;
  long attempts = 0;
  long successes = 0;
  long aborted = 0;
  long collisions = 0;
  long cav_collisions = 0;
  long cav_count = 0;  // CAVs that entered the road
  long arrivals = 0;   // demand, including still-queued entrants
  long spawned = 0;    // inserted onto the road
  long retired = 0;
  double throughput_vph = 0.0;
  double solve_time_mean_ms = 0.0;
  double solve_time_std_ms = 0.0;
  long solve_count = 0;
  long fallbacks = 0;
  std::vector<double> solve_times_ms;  // per-solve, for percentiles
  std::string trajectory_path;

  double attempts_per_cav() const {
    return cav_count > 0 ? static_cast<double>(attempts) / cav_count : 0.0;
  }
  double success_ratio() const {
    return attempts > 0 ? static_cast<double>(successes) / attempts : 0.0;
  }
};

struct Event {
  long step = 0;
  int vehicle_id = -1;
  std::string label;  // attempt | success | abort | collision:<other>
};

// Per-CAV attempt bookkeeping plus active collision pairs, carried across
// detect_events calls.
struct EventBook {
  struct AttemptState {
    bool active = false;
    long passes = 0;
    std::map<int, double> prev_z;  // same-direction vehicles, ego-frame gap
  };
  std::map<int, AttemptState> attempts;
  std::set<std::pair<int, int>> overlapping;
};

// Compare two consecutive world snapshots: lane flips become overtake
// attempt / success / abort events, crossings of same-direction vehicles
// while in the opposite lane count as passes, and newly overlapping
// same-lane occupied intervals become collision events.
std::vector<Event> detect_events(std::span<const VehicleState> before,
                                 std::span<const VehicleState> after,
                                 long step, EventBook& book);

class Simulation {
 public:
  explicit Simulation(const ScenarioConfig& cfg);
  ~Simulation();

  // scripted injection for replays and tests; returns the vehicle id
  int add_vehicle(VehicleState st, double v_desired = 0.0);

  void step();
  void run();           // all steps of cfg.duration
  void finalize();      // derived metrics (run() does this itself)

  long current_step() const { return step_count_; }
  std::vector<VehicleState> states() const;
  const MetricsRecord& metrics() const { return metrics_; }
  const ScenarioConfig& config() const { return cfg_; }

  // trajectory sink; empty path disables logging
  void open_trajectory(const std::string& path);

 private:
  struct SimVehicle;
  struct CavRuntime;

  void controller_tick(long tick);
  void move_vehicles();
  void process_events(const std::vector<VehicleState>& before);
  void retire_vehicles();
  void spawn_vehicles();
  void log_rows(const std::vector<Event>& events);

  ScenarioConfig cfg_;
  std::vector<SimVehicle> vehicles_;
  int next_id_ = 0;
  long step_count_ = 0;
  std::mt19937_64 rng_spawn_[2];
  std::mt19937_64 rng_hdv_;
  struct Pending {
    VehicleKind kind;
    double v_desired;
  };
  std::vector<Pending> queue_[2];
  EventBook book_;
  MetricsRecord metrics_;
  double solve_mean_ = 0.0, solve_m2_ = 0.0;  // Welford
  // ground-truth velocity histories (global-info mode)
  std::map<int, std::vector<std::pair<int, double>>> global_hist_;
  std::unique_ptr<std::ofstream> traj_;
  std::vector<Event> pending_events_;
  bool dumped_instance_ = false;
};

}  // namespace ovtsim
