#pragma once

#include <map>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "ovtsim/core.hpp"

namespace ovtsim {

struct SensorConfig {
  double sensor_range = 150.0;  // L_s [m]
  double comm_range = 300.0;    // V2V range [m]
  bool rear_sensing = true;     // mirrored construction behind the ego
};

enum class Provenance { OwnSensor, Communicated };

// A CAV's record of one observed vehicle.
struct Track {
  int target_id = -1;
  double s = 0.0;
  int lane = 0;
  double v = 0.0;  // magnitude
  int dir = +1;
  double length = 5.0;
  // (controller tick, speed) pairs, most recent last, bounded by the
  // prediction history window.
  std::vector<std::pair<int, double>> vel_history;
  Provenance provenance = Provenance::OwnSensor;
  int from_cav_id = -1;  // source CAV when communicated
};

struct ObservationSet {
  int owner_id = -1;
  std::vector<Track> tracks;  // unique target ids, never the owner

  const Track* find(int target_id) const {
    for (const auto& t : tracks)
      if (t.target_id == target_id) return &t;
    return nullptr;
  }
};

// Per-CAV velocity-history store, fed from the CAV's own sensing.
class TrackMemory {
 public:
  explicit TrackMemory(int window = 10) : window_(window) {}

  void record(int target_id, int tick, double v);
  // Drop targets whose newest sample is older than max_age ticks.
  void prune(int current_tick, int max_age);
  const std::vector<std::pair<int, double>>* history(int target_id) const;

 private:
  int window_;
  std::map<int, std::vector<std::pair<int, double>>> hist_;
};

// Distance gap to the nearest same-lane vehicle ahead, capped at the
// sensor range (which is also the no-leader value).
double leader_gap(std::span<const VehicleState> world, const VehicleState& i,
                  double sensor_range);

// Mirrored rear gap: nearest same-lane vehicle behind.
double follower_gap(std::span<const VehicleState> world, const VehicleState& i,
                    double sensor_range);

// Un-occluded visible range in the adjacent lane, L_d * L_w / L_c, capped
// at the sensor range.
double visible_range(double l_d, double lane_width, double half_vehicle_width,
                     double sensor_range);

// Occlusion-limited sensing for one CAV: the nearest same-lane leader
// within L_d, adjacent-lane vehicles within L_v, and (when rear_sensing)
// the mirrored construction behind. If memory is given, the current tick's
// readings are recorded there first and histories are attached to the
// returned tracks.
ObservationSet observe(std::span<const VehicleState> world,
                       const VehicleState& i, const SensorConfig& cfg,
                       const RoadConfig& road, TrackMemory* memory = nullptr,
                       int tick = 0);

struct CavBroadcast {
  int cav_id = -1;
  double s = 0.0;
  const ObservationSet* obs = nullptr;
};

// Single-hop V2V: union of tracks from every other CAV within comm_range,
// tagged with the sender. Duplicate targets are fused by keeping the
// geometrically closest observer (ties to the lower CAV id); tracks of the
// ego itself are excluded.
std::vector<Track> gather_communicated(std::span<const CavBroadcast> senders,
                                       const VehicleState& ego,
                                       double comm_range);

// The ids pertinent to the overtaking decision, relative to the ego's
// current physical lane: up to 3 same-lane leaders, 1 same-lane follower,
// 2 adjacent-lane leaders, 1 adjacent-lane follower. Ties by lower id.
std::vector<int> select_relevant(std::span<const Track> knowledge,
                                 const VehicleState& ego);

// W = I ∩ (O ∪ C), own-sensor provenance preferred on duplicates, capped
// at 6 tracks by dropping the farthest.
std::vector<Track> aggregate(const ObservationSet& own,
                             std::span<const Track> communicated,
                             std::span<const int> relevant,
                             const VehicleState& ego);

}  // namespace ovtsim
