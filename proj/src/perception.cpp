#include "ovtsim/perception.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ovtsim {

void TrackMemory::record(int target_id, int tick, double v) {
  auto& h = hist_[target_id];
  if (!h.empty() && h.back().first == tick) {
    h.back().second = v;
    return;
  }
  h.emplace_back(tick, v);
  if (static_cast<int>(h.size()) > window_)
    h.erase(h.begin(), h.begin() + (h.size() - window_));
}

void TrackMemory::prune(int current_tick, int max_age) {
  for (auto it = hist_.begin(); it != hist_.end();) {
    if (it->second.empty() || current_tick - it->second.back().first > max_age)
      it = hist_.erase(it);
    else
      ++it;
  }
}

const std::vector<std::pair<int, double>>* TrackMemory::history(
    int target_id) const {
  auto it = hist_.find(target_id);
  return it == hist_.end() ? nullptr : &it->second;
}

double leader_gap(std::span<const VehicleState> world, const VehicleState& i,
                  double sensor_range) {
  double best = sensor_range;
  for (const auto& p : world) {
    if (p.id == i.id || p.lane != i.lane) continue;
    double z = ego_gap(p, i);
    if (z > 0.0 && z < best) best = z;
  }
  return best;
}

double follower_gap(std::span<const VehicleState> world, const VehicleState& i,
                    double sensor_range) {
  double best = sensor_range;
  for (const auto& p : world) {
    if (p.id == i.id || p.lane != i.lane) continue;
    double z = ego_gap(p, i);
    if (z < 0.0 && -z < best) best = -z;
  }
  return best;
}

double visible_range(double l_d, double lane_width, double half_vehicle_width,
                     double sensor_range) {
  return std::min(l_d * lane_width / half_vehicle_width, sensor_range);
}

namespace {

Track make_track(const VehicleState& p) {
  Track t;
  t.target_id = p.id;
  t.s = p.s;
  t.lane = p.lane;
  t.v = p.v;
  t.dir = p.dir;
  t.length = p.length;
  t.provenance = Provenance::OwnSensor;
  return t;
}

}  // namespace

ObservationSet observe(std::span<const VehicleState> world,
                       const VehicleState& i, const SensorConfig& cfg,
                       const RoadConfig& road, TrackMemory* memory,
                       int tick) {
  ObservationSet out;
  out.owner_id = i.id;

  double ld = leader_gap(world, i, cfg.sensor_range);
  double lv = visible_range(ld, road.lane_width, road.half_vehicle_width,
                            cfg.sensor_range);
  double ld_rear = 0.0, lv_rear = 0.0;
  if (cfg.rear_sensing) {
    ld_rear = follower_gap(world, i, cfg.sensor_range);
    lv_rear = visible_range(ld_rear, road.lane_width, road.half_vehicle_width,
                            cfg.sensor_range);
  }

  for (const auto& p : world) {
    if (p.id == i.id) continue;
    double z = ego_gap(p, i);
    bool seen = false;
    if (p.lane == i.lane) {
      // own lane: only the first leader survives the L_d cap
      if (z > 0.0 && z <= ld) seen = true;
      if (cfg.rear_sensing && z < 0.0 && -z <= ld_rear) seen = true;
    } else {
      if (z >= 0.0 && z <= lv) seen = true;
      if (cfg.rear_sensing && z <= 0.0 && -z <= lv_rear) seen = true;
    }
    if (seen) out.tracks.push_back(make_track(p));
  }

  std::sort(out.tracks.begin(), out.tracks.end(),
            [](const Track& a, const Track& b) {
              return a.target_id < b.target_id;
            });

  if (memory) {
    for (auto& t : out.tracks) {
      memory->record(t.target_id, tick, t.v);
      if (const auto* h = memory->history(t.target_id)) t.vel_history = *h;
    }
  } else {
    for (auto& t : out.tracks) t.vel_history = {{tick, t.v}};
  }
  return out;
}

std::vector<Track> gather_communicated(std::span<const CavBroadcast> senders,
                                       const VehicleState& ego,
                                       double comm_range) {
  // target id -> (distance from observer to target, source id, track)
  std::map<int, std::pair<double, Track>> fused;
  for (const auto& bc : senders) {
    if (bc.cav_id == ego.id) continue;
    if (std::abs(bc.s - ego.s) > comm_range) continue;
    for (const auto& t : bc.obs->tracks) {
      if (t.target_id == ego.id) continue;
      double obs_dist = std::abs(bc.s - t.s);
      Track copy = t;
      copy.provenance = Provenance::Communicated;
      copy.from_cav_id = bc.cav_id;
      auto it = fused.find(t.target_id);
      if (it == fused.end() || obs_dist < it->second.first ||
          (obs_dist == it->second.first &&
           bc.cav_id < it->second.second.from_cav_id)) {
        fused[t.target_id] = {obs_dist, std::move(copy)};
      }
    }
  }
  std::vector<Track> out;
  out.reserve(fused.size());
  for (auto& [id, entry] : fused) out.push_back(std::move(entry.second));
  return out;
}

namespace {

struct Candidate {
  double gap;  // |ego-frame gap|
  int id;
};

// nearest k by gap, ties to the lower id
std::vector<int> take_nearest(std::vector<Candidate>& cands, std::size_t k) {
  std::sort(cands.begin(), cands.end(), [](const Candidate& a,
                                           const Candidate& b) {
    if (a.gap != b.gap) return a.gap < b.gap;
    return a.id < b.id;
  });
  std::vector<int> out;
  for (std::size_t i = 0; i < cands.size() && i < k; ++i)
    out.push_back(cands[i].id);
  return out;
}

}  // namespace

std::vector<int> select_relevant(std::span<const Track> knowledge,
                                 const VehicleState& ego) {
  std::vector<Candidate> same_lead, same_follow, adj_lead, adj_follow;
  std::map<int, bool> seen;
  for (const auto& t : knowledge) {
    if (t.target_id == ego.id) continue;
    if (seen.count(t.target_id)) continue;
    seen[t.target_id] = true;
    double z = ego.dir * (t.s - ego.s);
    bool same = (t.lane == ego.lane);
    if (same) {
      if (z > 0.0)
        same_lead.push_back({z, t.target_id});
      else if (z < 0.0)
        same_follow.push_back({-z, t.target_id});
      else
        same_lead.push_back({0.0, t.target_id});
    } else {
      if (z >= 0.0)
        adj_lead.push_back({z, t.target_id});
      else
        adj_follow.push_back({-z, t.target_id});
    }
  }
  std::vector<int> out;
  for (int id : take_nearest(same_lead, 3)) out.push_back(id);
  for (int id : take_nearest(same_follow, 1)) out.push_back(id);
  for (int id : take_nearest(adj_lead, 2)) out.push_back(id);
  for (int id : take_nearest(adj_follow, 1)) out.push_back(id);
  return out;
}

std::vector<Track> aggregate(const ObservationSet& own,
                             std::span<const Track> communicated,
                             std::span<const int> relevant,
                             const VehicleState& ego) {
  std::vector<Track> out;
  for (int id : relevant) {
    if (const Track* t = own.find(id)) {
      out.push_back(*t);
      continue;
    }
    for (const auto& c : communicated) {
      if (c.target_id == id) {
        out.push_back(c);
        break;
      }
    }
  }
  // hard cap of 6: drop the farthest (ties drop the higher id)
  while (out.size() > 6) {
    std::size_t worst = 0;
    double worst_gap = -1.0;
    for (std::size_t k = 0; k < out.size(); ++k) {
      double g = std::abs(ego.dir * (out[k].s - ego.s));
      if (g > worst_gap ||
          (g == worst_gap && out[k].target_id > out[worst].target_id)) {
        worst_gap = g;
        worst = k;
      }
    }
    out.erase(out.begin() + worst);
  }
  return out;
}

}  // namespace ovtsim
