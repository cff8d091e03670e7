#include "ovtsim/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace ovtsim {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

bool to_double(const std::string& s, double& out) {
  try {
    std::size_t pos = 0;
    out = std::stod(s, &pos);
    return pos == s.size();
  } catch (...) {
    return false;
  }
}

bool to_int(const std::string& s, long& out) {
  try {
    std::size_t pos = 0;
    out = std::stol(s, &pos);
    return pos == s.size();
  } catch (...) {
    return false;
  }
}

bool to_bool(const std::string& s, bool& out) {
  if (s == "true" || s == "1" || s == "yes") {
    out = true;
    return true;
  }
  if (s == "false" || s == "0" || s == "no") {
    out = false;
    return true;
  }
  return false;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

bool parse_config_text(const std::string& text,
                       std::map<std::string, std::string>& out,
                       std::vector<Diagnostic>& diags) {
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  bool ok = true;
  while (std::getline(ss, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      diags.push_back({"line " + std::to_string(lineno),
                       "expected key=value, got: " + line});
      ok = false;
      continue;
    }
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      diags.push_back({"line " + std::to_string(lineno), "empty key"});
      ok = false;
      continue;
    }
    out[key] = value;
  }
  return ok;
}

void apply_config(const std::map<std::string, std::string>& kv,
                  ScenarioConfig& cfg, SweepSpec& sweep,
                  std::vector<Diagnostic>& diags) {
  for (const auto& [key, value] : kv) {
    double d = 0;
    long n = 0;
    bool b = false;
    auto bad_value = [&]() {
      diags.push_back({key, "malformed value: " + value});
    };
    auto set_d = [&](double& field) {
      if (to_double(value, d))
        field = d;
      else
        bad_value();
    };
    auto set_i = [&](int& field) {
      if (to_int(value, n))
        field = static_cast<int>(n);
      else
        bad_value();
    };
    auto set_l = [&](long& field) {
      if (to_int(value, n))
        field = n;
      else
        bad_value();
    };
    auto set_b = [&](bool& field) {
      if (to_bool(value, b))
        field = b;
      else
        bad_value();
    };

    if (key == "road.length") set_d(cfg.road.length);
    else if (key == "road.speed_limit") set_d(cfg.road.v_bar);
    else if (key == "road.lane_width") set_d(cfg.road.lane_width);
    else if (key == "road.half_vehicle_width") set_d(cfg.road.half_vehicle_width);
    else if (key == "sim.step") set_d(cfg.sim_step);
    else if (key == "sim.controller_period") set_d(cfg.controller_period);
    else if (key == "sim.duration") set_d(cfg.duration);
    else if (key == "sim.seed") {
      if (to_int(value, n) && n >= 0)
        cfg.seed = static_cast<std::uint64_t>(n);
      else
        bad_value();
    } else if (key == "sim.log_trajectory") set_b(cfg.log_trajectory);
    else if (key == "traffic.flow_rate") set_d(cfg.flow_rate);
    else if (key == "traffic.cav_penetration") set_d(cfg.cav_penetration);
    else if (key == "traffic.info_mode") {
      auto m = info_mode_from_string(value);
      if (m)
        cfg.info_mode = *m;
      else
        diags.push_back({key, "unknown info mode: " + value});
    } else if (key == "hdv.a_max") set_d(cfg.hdv.a_max);
    else if (key == "hdv.b_decel") set_d(cfg.hdv.b_decel);
    else if (key == "hdv.tau_r") set_d(cfg.hdv.tau_r);
    else if (key == "hdv.sigma_noise") set_d(cfg.hdv.sigma_noise);
    else if (key == "hdv.v_desired_mean") set_d(cfg.hdv.v_desired_mean);
    else if (key == "hdv.v_desired_std") set_d(cfg.hdv.v_desired_std);
    else if (key == "hdv.v_desired_min") set_d(cfg.hdv.v_desired_min);
    else if (key == "hdv.length") set_d(cfg.hdv.length);
    else if (key == "cav.length") set_d(cfg.cav.length);
    else if (key == "cav.a_max") set_d(cfg.cav.a_max);
    else if (key == "cav.a_min") set_d(cfg.cav.a_min);
    else if (key == "sensor.range") set_d(cfg.sensor.sensor_range);
    else if (key == "sensor.comm_range") set_d(cfg.sensor.comm_range);
    else if (key == "sensor.rear") set_b(cfg.sensor.rear_sensing);
    else if (key == "prediction.accel_horizon") set_i(cfg.prediction.accel_horizon);
    else if (key == "prediction.horizon") set_i(cfg.prediction.horizon);
    else if (key == "prediction.history_window") set_i(cfg.prediction.history_window);
    else if (key == "prediction.min_samples") set_i(cfg.prediction.min_samples);
    else if (key == "prediction.literal_ramp") set_b(cfg.prediction.literal_ramp);
    else if (key == "controller.horizon") set_i(cfg.controller.horizon);
    else if (key == "controller.gamma1") set_d(cfg.controller.weights.gamma1);
    else if (key == "controller.gamma2") set_d(cfg.controller.weights.gamma2);
    else if (key == "controller.gamma3") set_d(cfg.controller.weights.gamma3);
    else if (key == "controller.margin0") set_d(cfg.controller.margins.m0);
    else if (key == "controller.margin_v") set_d(cfg.controller.margins.mv);
    else if (key == "controller.margin_a") set_d(cfg.controller.margins.ma);
    else if (key == "controller.margin_l") set_d(cfg.controller.margins.ml);
    else if (key == "controller.big_m") set_d(cfg.controller.big_m);
    else if (key == "controller.presolve_fixing") set_b(cfg.controller.presolve_fixing);
    else if (key == "solver.abs_gap") set_d(cfg.controller.solver.abs_gap);
    else if (key == "solver.rel_gap") set_d(cfg.controller.solver.rel_gap);
    else if (key == "solver.node_limit") set_l(cfg.controller.solver.node_limit);
    else if (key == "solver.time_limit_ms") set_d(cfg.controller.solver.time_limit_ms);
    else if (key == "solver.feas_tol") set_d(cfg.controller.solver.feas_tol);
    else if (key == "sweep.flows") {
      sweep.flows.clear();
      for (const auto& item : split_list(value)) {
        if (to_double(item, d))
          sweep.flows.push_back(d);
        else
          bad_value();
      }
    } else if (key == "sweep.penetrations") {
      sweep.penetrations.clear();
      for (const auto& item : split_list(value)) {
        if (to_double(item, d))
          sweep.penetrations.push_back(d);
        else
          bad_value();
      }
    } else if (key == "sweep.modes") {
      sweep.modes.clear();
      for (const auto& item : split_list(value)) {
        auto m = info_mode_from_string(item);
        if (m)
          sweep.modes.push_back(*m);
        else
          diags.push_back({key, "unknown info mode: " + item});
      }
    } else if (key == "sweep.seeds") {
      if (to_int(value, n))
        sweep.seeds = static_cast<int>(n);
      else
        bad_value();
    } else if (key == "sweep.out_dir") {
      sweep.out_dir = value;
    } else {
      diags.push_back({key, "unknown configuration key"});
    }
  }
}

std::vector<Diagnostic> validate_scenario(const ScenarioConfig& cfg) {
  std::vector<Diagnostic> diags;
  auto require = [&](bool ok, const std::string& key,
                     const std::string& msg) {
    if (!ok) diags.push_back({key, msg});
  };
  require(cfg.road.length > 0, "road.length", "must be > 0");
  require(cfg.road.v_bar > 0, "road.speed_limit", "must be > 0");
  require(cfg.road.lane_width > cfg.road.half_vehicle_width &&
              cfg.road.half_vehicle_width > 0,
          "road.lane_width",
          "lane_width > half_vehicle_width > 0 required (see also "
          "road.half_vehicle_width)");
  require(cfg.sim_step > 0, "sim.step", "must be > 0");
  require(cfg.controller_period > 0, "sim.controller_period", "must be > 0");
  if (cfg.sim_step > 0 && cfg.controller_period > 0) {
    double ratio = cfg.controller_period / cfg.sim_step;
    require(std::abs(ratio - std::lround(ratio)) < 1e-9 && ratio >= 1.0,
            "sim.controller_period",
            "must be an integer multiple of sim.step");
  }
  require(cfg.duration >= 0, "sim.duration", "must be >= 0");
  require(cfg.flow_rate >= 0, "traffic.flow_rate", "must be >= 0");
  require(cfg.cav_penetration >= 0 && cfg.cav_penetration <= 1,
          "traffic.cav_penetration", "must be within [0,1]");
  require(cfg.hdv.a_max >= 0, "hdv.a_max", "must be >= 0");
  require(cfg.hdv.b_decel > 0, "hdv.b_decel", "must be > 0");
  require(cfg.hdv.tau_r >= 0, "hdv.tau_r", "must be >= 0");
  require(cfg.hdv.sigma_noise >= 0, "hdv.sigma_noise", "must be >= 0");
  require(cfg.hdv.v_desired_mean > 0 && cfg.hdv.v_desired_mean <= cfg.road.v_bar,
          "hdv.v_desired_mean", "must be within (0, speed_limit]");
  require(cfg.hdv.v_desired_min > 0, "hdv.v_desired_min", "must be > 0");
  require(cfg.hdv.length > 0, "hdv.length", "must be > 0");
  require(cfg.cav.length > 0, "cav.length", "must be > 0");
  require(cfg.cav.a_max > 0, "cav.a_max", "must be > 0");
  require(cfg.cav.a_min < 0, "cav.a_min", "must be < 0");
  require(cfg.sensor.sensor_range > 0, "sensor.range", "must be > 0");
  require(cfg.sensor.comm_range > 0, "sensor.comm_range", "must be > 0");
  require(cfg.prediction.accel_horizon >= 0 &&
              cfg.prediction.accel_horizon <= cfg.prediction.horizon,
          "prediction.accel_horizon", "requires 0 <= H_a <= H_p");
  require(cfg.prediction.min_samples >= 2, "prediction.min_samples",
          "must be >= 2");
  require(cfg.prediction.history_window >= cfg.prediction.min_samples,
          "prediction.history_window", "must be >= prediction.min_samples");
  require(cfg.prediction.horizon >= cfg.controller.horizon,
          "prediction.horizon", "must cover controller.horizon");
  require(cfg.controller.horizon >= 1, "controller.horizon", "must be >= 1");
  require(cfg.controller.weights.gamma1 >= 0, "controller.gamma1",
          "must be >= 0");
  require(cfg.controller.weights.gamma2 >= 0, "controller.gamma2",
          "must be >= 0");
  require(cfg.controller.weights.gamma3 >= 0, "controller.gamma3",
          "must be >= 0");
  require(cfg.controller.margins.m0 > 0, "controller.margin0", "must be > 0");
  require(cfg.controller.margins.mv > 0, "controller.margin_v", "must be > 0");
  require(cfg.controller.margins.ma > 0, "controller.margin_a", "must be > 0");
  require(cfg.controller.margins.ml > 0, "controller.margin_l", "must be > 0");
  require(cfg.controller.big_m > 0, "controller.big_m", "must be > 0");
  require(cfg.controller.solver.abs_gap > 0, "solver.abs_gap", "must be > 0");
  require(cfg.controller.solver.rel_gap > 0, "solver.rel_gap", "must be > 0");
  require(cfg.controller.solver.node_limit > 0, "solver.node_limit",
          "must be > 0");
  return diags;
}

std::vector<Diagnostic> validate_sweep(const SweepSpec& spec) {
  std::vector<Diagnostic> diags;
  if (spec.flows.empty())
    diags.push_back({"sweep.flows", "at least one flow rate required"});
  for (double f : spec.flows)
    if (f < 0) diags.push_back({"sweep.flows", "flow rates must be >= 0"});
  if (spec.penetrations.empty())
    diags.push_back(
        {"sweep.penetrations", "at least one penetration level required"});
  for (double p : spec.penetrations)
    if (p < 0 || p > 1)
      diags.push_back({"sweep.penetrations", "must be within [0,1]"});
  if (spec.modes.empty())
    diags.push_back({"sweep.modes", "at least one info mode required"});
  if (spec.seeds < 1)
    diags.push_back({"sweep.seeds", "must be >= 1"});
  return diags;
}

bool load_config_file(const std::string& path, ScenarioConfig& cfg,
                      SweepSpec& sweep, std::vector<Diagnostic>& diags) {
  std::ifstream in(path);
  if (!in.good()) {
    diags.push_back({path, "cannot open config file"});
    return false;
  }
  std::stringstream buf;
  buf << in.rdbuf();
  std::map<std::string, std::string> kv;
  bool ok = parse_config_text(buf.str(), kv, diags);
  apply_config(kv, cfg, sweep, diags);
  auto v = validate_scenario(cfg);
  diags.insert(diags.end(), v.begin(), v.end());
  if (sweep.defined()) {
    auto sv = validate_sweep(sweep);
    diags.insert(diags.end(), sv.begin(), sv.end());
  }
  return ok && diags.empty();
}

}  // namespace ovtsim
