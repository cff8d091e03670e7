#include "ovtsim/engine.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace ovtsim {

std::string to_string(InfoMode mode) {
  switch (mode) {
    case InfoMode::Cooperative: return "cooperative";
    case InfoMode::SingleAgent: return "single_agent";
    case InfoMode::GlobalInfo: return "global_info";
  }
  return "cooperative";
}

std::optional<InfoMode> info_mode_from_string(const std::string& s) {
  if (s == "cooperative") return InfoMode::Cooperative;
  if (s == "single_agent") return InfoMode::SingleAgent;
  if (s == "global_info") return InfoMode::GlobalInfo;
  return std::nullopt;
}

int ScenarioConfig::steps_per_tick() const {
  return static_cast<int>(std::lround(controller_period / sim_step));
}

long ScenarioConfig::total_steps() const {
  return std::lround(duration / sim_step);
}

namespace {

// occupied interval: the body extends behind the front bumper
std::pair<double, double> occupied(const VehicleState& v) {
  if (v.dir > 0) return {v.s - v.length, v.s};
  return {v.s, v.s + v.length};
}

}  // namespace

std::vector<Event> detect_events(std::span<const VehicleState> before,
                                 std::span<const VehicleState> after,
                                 long step, EventBook& book) {
  std::vector<Event> events;
  std::map<int, const VehicleState*> prev;
  for (const auto& v : before) prev[v.id] = &v;

  // lane flips: attempt start / success / abort
  for (const auto& v : after) {
    auto it = prev.find(v.id);
    if (it == prev.end()) continue;
    const VehicleState& b = *it->second;
    if (v.kind != VehicleKind::Cav || v.lane == b.lane) continue;
    auto& st = book.attempts[v.id];
    if (!v.in_home_lane()) {
      st.active = true;
      st.passes = 0;
      st.prev_z.clear();
      for (const auto& p : before)
        if (p.id != v.id && p.dir == v.dir) st.prev_z[p.id] = ego_gap(p, b);
      events.push_back({step, v.id, "attempt"});
    } else if (st.active) {
      events.push_back({step, v.id, st.passes > 0 ? "success" : "abort"});
      st.active = false;
      st.prev_z.clear();
    }
  }

  // crossings of same-direction vehicles while in the opposite lane
  for (const auto& v : after) {
    if (v.kind != VehicleKind::Cav || v.in_home_lane()) continue;
    auto it = book.attempts.find(v.id);
    if (it == book.attempts.end() || !it->second.active) continue;
    auto& st = it->second;
    for (const auto& p : after) {
      if (p.id == v.id || p.dir != v.dir) continue;
      double z = ego_gap(p, v);
      auto pit = st.prev_z.find(p.id);
      if (pit != st.prev_z.end() && pit->second > 0.0 && z <= 0.0)
        st.passes++;
      st.prev_z[p.id] = z;
    }
  }

  // same-lane interval overlaps, reported once per pair on onset
  std::set<std::pair<int, int>> now_overlapping;
  for (int lane = 0; lane <= 1; ++lane) {
    std::vector<const VehicleState*> in_lane;
    for (const auto& v : after)
      if (v.lane == lane) in_lane.push_back(&v);
    std::sort(in_lane.begin(), in_lane.end(),
              [](const VehicleState* a, const VehicleState* b) {
                if (a->s != b->s) return a->s < b->s;
                return a->id < b->id;
              });
    for (std::size_t i = 0; i + 1 < in_lane.size(); ++i) {
      for (std::size_t j = i + 1; j < std::min(i + 3, in_lane.size()); ++j) {
        auto [lo1, hi1] = occupied(*in_lane[i]);
        auto [lo2, hi2] = occupied(*in_lane[j]);
        if (std::max(lo1, lo2) < std::min(hi1, hi2)) {
          int a = std::min(in_lane[i]->id, in_lane[j]->id);
          int b = std::max(in_lane[i]->id, in_lane[j]->id);
          now_overlapping.insert({a, b});
        }
      }
    }
  }
  for (const auto& pr : now_overlapping) {
    if (!book.overlapping.count(pr)) {
      events.push_back(
          {step, pr.first, "collision:" + std::to_string(pr.second)});
    }
  }
  book.overlapping = std::move(now_overlapping);

  return events;
}

struct Simulation::CavRuntime {
  TrackMemory memory;
  WarmCache warm;
  explicit CavRuntime(int window) : memory(window) {}
};

struct Simulation::SimVehicle {
  VehicleState st;
  double v_desired = 0.0;       // HDV target speed
  double cmd = 0.0;             // commanded speed for the current period
  double v_period_start = 0.0;  // speed when the command was issued
  int ramp_step = 0;
  std::unique_ptr<CavRuntime> cav;
};

Simulation::Simulation(const ScenarioConfig& cfg) : cfg_(cfg) {
  if (cfg_.steps_per_tick() < 1 ||
      std::abs(cfg_.steps_per_tick() * cfg_.sim_step -
               cfg_.controller_period) > 1e-9)
    throw std::invalid_argument(
        "controller_period must be an integer multiple of sim_step");
  std::seed_seq s0{cfg_.seed, std::uint64_t(0x5157)};
  std::seed_seq s1{cfg_.seed, std::uint64_t(0x5158)};
  std::seed_seq s2{cfg_.seed, std::uint64_t(0x6a1d)};
  rng_spawn_[0].seed(s0);
  rng_spawn_[1].seed(s1);
  rng_hdv_.seed(s2);
}

Simulation::~Simulation() = default;

int Simulation::add_vehicle(VehicleState st, double v_desired) {
  SimVehicle v;
  st.id = next_id_++;
  v.st = st;
  v.v_desired = v_desired > 0 ? v_desired : st.v;
  v.cmd = st.v;
  v.v_period_start = st.v;
  if (st.kind == VehicleKind::Cav) {
    v.cav = std::make_unique<CavRuntime>(cfg_.prediction.history_window);
    metrics_.cav_count++;
  }
  metrics_.spawned++;
  vehicles_.push_back(std::move(v));
  return st.id;
}

std::vector<VehicleState> Simulation::states() const {
  std::vector<VehicleState> out;
  out.reserve(vehicles_.size());
  for (const auto& v : vehicles_) out.push_back(v.st);
  return out;
}

void Simulation::open_trajectory(const std::string& path) {
  if (path.empty()) return;
  traj_ = std::make_unique<std::ofstream>(path);
  if (!traj_->good())
    throw std::runtime_error("cannot open trajectory file: " + path);
  (*traj_) << "tick,time_s,id,kind,lane,dir,s,v,commanded_v,event\n";
  metrics_.trajectory_path = path;
}

void Simulation::controller_tick(long tick) {
  std::vector<VehicleState> snap = states();
  std::vector<std::size_t> cav_idx;
  for (std::size_t i = 0; i < vehicles_.size(); ++i)
    if (vehicles_[i].st.kind == VehicleKind::Cav) cav_idx.push_back(i);
  if (cav_idx.empty()) return;

  if (cfg_.info_mode == InfoMode::GlobalInfo) {
    for (const auto& v : snap) {
      auto& h = global_hist_[v.id];
      h.emplace_back(static_cast<int>(tick), v.v);
      if (static_cast<int>(h.size()) > cfg_.prediction.history_window)
        h.erase(h.begin());
    }
  }

  // phase 1: every CAV senses the same snapshot
  std::vector<ObservationSet> obs(cav_idx.size());
  for (std::size_t c = 0; c < cav_idx.size(); ++c) {
    SimVehicle& veh = vehicles_[cav_idx[c]];
    if (cfg_.info_mode == InfoMode::GlobalInfo) {
      ObservationSet o;
      o.owner_id = veh.st.id;
      for (const auto& p : snap) {
        if (p.id == veh.st.id) continue;
        Track t;
        t.target_id = p.id;
        t.s = p.s;
        t.lane = p.lane;
        t.v = p.v;
        t.dir = p.dir;
        t.length = p.length;
        t.vel_history = global_hist_[p.id];
        o.tracks.push_back(std::move(t));
      }
      obs[c] = std::move(o);
    } else {
      obs[c] = observe(snap, veh.st, cfg_.sensor, cfg_.road,
                       &veh.cav->memory, static_cast<int>(tick));
      veh.cav->memory.prune(static_cast<int>(tick),
                            2 * cfg_.prediction.history_window);
    }
  }

  std::vector<CavBroadcast> broadcasts;
  if (cfg_.info_mode == InfoMode::Cooperative) {
    for (std::size_t c = 0; c < cav_idx.size(); ++c)
      broadcasts.push_back(
          {vehicles_[cav_idx[c]].st.id, vehicles_[cav_idx[c]].st.s, &obs[c]});
  }

  // phase 2: gather, select, aggregate, predict, plan; no state mutation
  struct Decision {
    std::size_t idx;
    PlanResult plan;
  };
  std::vector<Decision> decisions;
  PredictionConfig pred_cfg = cfg_.prediction;
  pred_cfg.horizon = std::max(pred_cfg.horizon, cfg_.controller.horizon);

  for (std::size_t c = 0; c < cav_idx.size(); ++c) {
    SimVehicle& veh = vehicles_[cav_idx[c]];
    std::vector<Track> comm;
    if (cfg_.info_mode == InfoMode::Cooperative)
      comm = gather_communicated(broadcasts, veh.st, cfg_.sensor.comm_range);

    std::vector<Track> knowledge = obs[c].tracks;
    knowledge.insert(knowledge.end(), comm.begin(), comm.end());
    std::vector<int> relevant = select_relevant(knowledge, veh.st);
    std::vector<Track> fused = aggregate(obs[c], comm, relevant, veh.st);

    std::vector<PredictedTrajectory> trajs;
    trajs.reserve(fused.size());
    for (const auto& t : fused) {
      PredictedTrajectory pt;
      pt.target_id = t.target_id;
      double slope = fit_slope(t.vel_history, pred_cfg);
      pt.v_hat = predict_velocity(t.v, slope, pred_cfg, cfg_.road.v_bar);
      pt.s_hat =
          predict_position(t.s, t.dir, pt.v_hat, cfg_.controller.ts);
      pt.dir = t.dir;
      pt.lane = t.lane;
      pt.length = t.length;
      trajs.push_back(std::move(pt));
    }

    if (!cfg_.dump_miqp_path.empty() && !dumped_instance_) {
      MiqpProblem prob =
          build_problem(veh.st, trajs, cfg_.road, cfg_.controller);
      std::ofstream os(cfg_.dump_miqp_path);
      if (os.good()) dump_instance(prob, prob.to_qp(false), os);
      dumped_instance_ = true;
    }

    PlanResult pr =
        plan(veh.st, trajs, cfg_.road, cfg_.controller, &veh.cav->warm);
    decisions.push_back({cav_idx[c], std::move(pr)});
  }

  // phase 3: simultaneous commit
  for (auto& d : decisions) {
    SimVehicle& veh = vehicles_[d.idx];
    veh.cmd = d.plan.u_next;
    veh.v_period_start = veh.st.v;
    veh.ramp_step = 0;
    if (d.plan.lane_decision != veh.st.lane)
      veh.st.lane = d.plan.lane_decision;

    metrics_.solve_count++;
    metrics_.solve_times_ms.push_back(d.plan.solve_time_ms);
    double delta = d.plan.solve_time_ms - solve_mean_;
    solve_mean_ += delta / metrics_.solve_count;
    solve_m2_ += delta * (d.plan.solve_time_ms - solve_mean_);
    if (d.plan.fallback) metrics_.fallbacks++;
  }
}

void Simulation::move_vehicles() {
  std::vector<VehicleState> snap = states();
  const double dt = cfg_.sim_step;
  const int steps_per_tick = cfg_.steps_per_tick();

  std::vector<double> v_next(vehicles_.size());
  for (std::size_t i = 0; i < vehicles_.size(); ++i) {
    SimVehicle& veh = vehicles_[i];
    if (veh.st.kind == VehicleKind::Hdv) {
      // nearest same-lane vehicle ahead
      const VehicleState* leader = nullptr;
      double best = std::numeric_limits<double>::infinity();
      for (const auto& p : snap) {
        if (p.id == veh.st.id || p.lane != veh.st.lane) continue;
        double z = ego_gap(p, veh.st);
        if (z > 0.0 && z < best) {
          best = z;
          leader = &p;
        }
      }
      KraussParams kp;
      kp.a_max = cfg_.hdv.a_max;
      kp.b_decel = cfg_.hdv.b_decel;
      kp.tau_r = cfg_.hdv.tau_r;
      kp.sigma_noise = cfg_.hdv.sigma_noise;
      kp.v_desired = veh.v_desired;
      std::optional<VehicleState> lead;
      if (leader) lead = *leader;
      v_next[i] = hdv_step(veh.st, lead, kp, cfg_.road.v_bar, dt, rng_hdv_);
    } else {
      veh.ramp_step = std::min(veh.ramp_step + 1, steps_per_tick);
      double span = cfg_.controller_period;
      double delta = std::clamp(veh.cmd - veh.v_period_start,
                                veh.st.a_min * span, veh.st.a_max * span);
      double target = veh.v_period_start + delta;
      double frac =
          static_cast<double>(veh.ramp_step) / steps_per_tick;
      v_next[i] = std::max(0.0, veh.v_period_start + (target - veh.v_period_start) * frac);
    }
  }
  for (std::size_t i = 0; i < vehicles_.size(); ++i) {
    SimVehicle& veh = vehicles_[i];
    veh.st.s = advance_state(veh.st.s, veh.st.v, v_next[i], veh.st.dir, dt);
    veh.st.v = v_next[i];
  }
}

void Simulation::process_events(const std::vector<VehicleState>& before) {
  std::vector<VehicleState> after = states();
  std::vector<Event> events = detect_events(before, after, step_count_, book_);
  for (const auto& e : events) {
    if (e.label == "attempt") {
      metrics_.attempts++;
      metrics_.attempts_by_cav[e.vehicle_id]++;
    } else if (e.label == "success") {
      metrics_.successes++;
      metrics_.successes_by_cav[e.vehicle_id]++;
    } else if (e.label == "abort") {
      metrics_.aborted++;
    } else if (e.label.rfind("collision:", 0) == 0) {
      metrics_.collisions++;
      int other = std::stoi(e.label.substr(10));
      bool cav_involved = false;
      for (const auto& v : after)
        if ((v.id == e.vehicle_id || v.id == other) &&
            v.kind == VehicleKind::Cav)
          cav_involved = true;
      if (cav_involved) metrics_.cav_collisions++;
    }
  }
  pending_events_ = std::move(events);
}

void Simulation::log_rows(const std::vector<Event>& events) {
  if (!traj_) return;
  char buf[256];
  for (const auto& veh : vehicles_) {
    std::string ev;
    for (const auto& e : events) {
      if (e.vehicle_id != veh.st.id) continue;
      if (!ev.empty()) ev += ';';
      ev += e.label;
    }
    double cmd = veh.st.kind == VehicleKind::Cav ? veh.cmd : veh.st.v;
    std::snprintf(buf, sizeof(buf), "%ld,%.2f,%d,%s,%d,%d,%.4f,%.4f,%.4f,",
                  step_count_, (step_count_ + 1) * cfg_.sim_step, veh.st.id,
                  veh.st.kind == VehicleKind::Cav ? "cav" : "hdv",
                  veh.st.lane, veh.st.dir, veh.st.s, veh.st.v, cmd);
    (*traj_) << buf << ev << "\n";
  }
}

void Simulation::retire_vehicles() {
  for (auto it = vehicles_.begin(); it != vehicles_.end();) {
    const VehicleState& st = it->st;
    bool done = (st.dir > 0 && st.s > cfg_.road.length) ||
                (st.dir < 0 && st.s < 0.0);
    if (done) {
      metrics_.retired++;
      book_.attempts.erase(st.id);
      global_hist_.erase(st.id);
      for (auto p = book_.overlapping.begin(); p != book_.overlapping.end();) {
        if (p->first == st.id || p->second == st.id)
          p = book_.overlapping.erase(p);
        else
          ++p;
      }
      it = vehicles_.erase(it);
    } else {
      ++it;
    }
  }
}

void Simulation::spawn_vehicles() {
  for (int d = 0; d < 2; ++d) {
    double lambda = cfg_.flow_rate / 60.0 * cfg_.sim_step;
    if (lambda > 0.0) {
      std::poisson_distribution<int> arrivals(lambda);
      int n = arrivals(rng_spawn_[d]);
      for (int k = 0; k < n; ++k) {
        metrics_.arrivals++;
        std::bernoulli_distribution is_cav(cfg_.cav_penetration);
        Pending p;
        p.kind = is_cav(rng_spawn_[d]) ? VehicleKind::Cav : VehicleKind::Hdv;
        p.v_desired = 0.0;
        if (p.kind == VehicleKind::Hdv) {
          std::normal_distribution<double> vd(cfg_.hdv.v_desired_mean,
                                              cfg_.hdv.v_desired_std);
          p.v_desired = std::clamp(vd(rng_spawn_[d]), cfg_.hdv.v_desired_min,
                                   cfg_.road.v_bar);
        }
        queue_[d].push_back(p);
      }
    }
    // FIFO insertion gated by a 2 s headway to the nearest downstream vehicle
    while (!queue_[d].empty()) {
      const Pending& p = queue_[d].front();
      double entry_s = d == 0 ? 0.0 : cfg_.road.length;
      int dir = d == 0 ? +1 : -1;
      double v_entry =
          p.kind == VehicleKind::Cav ? cfg_.road.v_bar / 2.0 : p.v_desired;
      double best = std::numeric_limits<double>::infinity();
      const SimVehicle* lead = nullptr;
      for (const auto& veh : vehicles_) {
        if (veh.st.lane != d) continue;
        double z = dir * (veh.st.s - entry_s);
        if (z >= 0.0 && z < best) {
          best = z;
          lead = &veh;
        }
      }
      if (lead && best - lead->st.length < 2.0 * v_entry) break;

      VehicleState st;
      st.s = entry_s;
      st.v = v_entry;
      st.dir = dir;
      st.lane = d;
      st.kind = p.kind;
      if (p.kind == VehicleKind::Cav) {
        st.length = cfg_.cav.length;
        st.a_max = cfg_.cav.a_max;
        st.a_min = cfg_.cav.a_min;
      } else {
        st.length = cfg_.hdv.length;
        st.a_max = cfg_.hdv.a_max;
        st.a_min = -cfg_.hdv.b_decel;
      }
      add_vehicle(st, p.v_desired);
      queue_[d].erase(queue_[d].begin());
    }
  }
}

void Simulation::step() {
  std::vector<VehicleState> before = states();
  if (step_count_ % cfg_.steps_per_tick() == 0)
    controller_tick(step_count_ / cfg_.steps_per_tick());
  move_vehicles();
  process_events(before);
  log_rows(pending_events_);
  retire_vehicles();
  spawn_vehicles();
  step_count_++;
}

void Simulation::finalize() {
  if (cfg_.duration > 0)
    metrics_.throughput_vph = metrics_.retired / cfg_.duration * 3600.0;
  metrics_.solve_time_mean_ms = solve_mean_;
  metrics_.solve_time_std_ms =
      metrics_.solve_count > 1
          ? std::sqrt(solve_m2_ / (metrics_.solve_count - 1))
          : 0.0;
  if (traj_) traj_->flush();
}

void Simulation::run() {
  long n = cfg_.total_steps();
  for (long i = 0; i < n; ++i) step();
  finalize();
}

}  // namespace ovtsim
