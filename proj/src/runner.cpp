#include "ovtsim/runner.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace ovtsim {

namespace {

std::string format_g(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

std::string cell_dir_name(double flow, double pen, InfoMode mode) {
  return "flow" + format_g(flow) + "_pen" + format_g(pen) + "_" +
         to_string(mode);
}

struct Welford {
  long n = 0;
  double mean = 0, m2 = 0;
  void add(double x) {
    n++;
    double d = x - mean;
    mean += d / n;
    m2 += d * (x - mean);
  }
  double std_dev() const { return n > 1 ? std::sqrt(m2 / (n - 1)) : 0.0; }
};

}  // namespace

std::string metrics_csv_header() {
  return "flow_rate,penetration,mode,seed_index,seed,cav_count,attempts,"
         "successes,aborted,success_ratio,attempts_per_cav,collisions,"
         "cav_collisions,throughput_vph,fallbacks,arrivals,spawned,retired,"
         "solve_count,solve_time_mean_ms,solve_time_std_ms";
}

std::string metrics_csv_row(const ScenarioConfig& cfg, int seed_index,
                            const MetricsRecord& m) {
  char buf[512];
  std::snprintf(
      buf, sizeof(buf),
      "%g,%g,%s,%d,%llu,%ld,%ld,%ld,%ld,%.6f,%.6f,%ld,%ld,%.4f,%ld,%ld,%ld,"
      "%ld,%ld,%.4f,%.4f",
      cfg.flow_rate, cfg.cav_penetration, to_string(cfg.info_mode).c_str(),
      seed_index, static_cast<unsigned long long>(cfg.seed), m.cav_count,
      m.attempts, m.successes, m.aborted, m.success_ratio(),
      m.attempts_per_cav(), m.collisions, m.cav_collisions, m.throughput_vph,
      m.fallbacks, m.arrivals, m.spawned, m.retired, m.solve_count,
      m.solve_time_mean_ms, m.solve_time_std_ms);
  return buf;
}

bool parse_metrics_csv_row(const std::string& line, CellResult& out) {
  std::stringstream ss(line);
  std::string field;
  std::vector<std::string> f;
  while (std::getline(ss, field, ',')) f.push_back(field);
  if (f.size() != 21) return false;
  try {
    out.flow = std::stod(f[0]);
    out.penetration = std::stod(f[1]);
    auto m = info_mode_from_string(f[2]);
    if (!m) return false;
    out.mode = *m;
    out.seed_index = std::stoi(f[3]);
    out.seed = std::stoull(f[4]);
    MetricsRecord& mr = out.metrics;
    mr.cav_count = std::stol(f[5]);
    mr.attempts = std::stol(f[6]);
    mr.successes = std::stol(f[7]);
    mr.aborted = std::stol(f[8]);
    mr.collisions = std::stol(f[11]);
    mr.cav_collisions = std::stol(f[12]);
    mr.throughput_vph = std::stod(f[13]);
    mr.fallbacks = std::stol(f[14]);
    mr.arrivals = std::stol(f[15]);
    mr.spawned = std::stol(f[16]);
    mr.retired = std::stol(f[17]);
    mr.solve_count = std::stol(f[18]);
    mr.solve_time_mean_ms = std::stod(f[19]);
    mr.solve_time_std_ms = std::stod(f[20]);
  } catch (...) {
    return false;
  }
  return true;
}

void write_metrics_text(const ScenarioConfig& cfg, const MetricsRecord& m,
                        const std::string& path) {
  std::ofstream os(path);
  os << "flow_rate=" << format_g(cfg.flow_rate) << "\n";
  os << "cav_penetration=" << format_g(cfg.cav_penetration) << "\n";
  os << "info_mode=" << to_string(cfg.info_mode) << "\n";
  os << "seed=" << cfg.seed << "\n";
  os << "duration_s=" << format_g(cfg.duration) << "\n";
  os << "cav_count=" << m.cav_count << "\n";
  os << "attempts=" << m.attempts << "\n";
  os << "successes=" << m.successes << "\n";
  os << "aborted=" << m.aborted << "\n";
  os << "success_ratio=" << m.success_ratio() << "\n";
  os << "attempts_per_cav=" << m.attempts_per_cav() << "\n";
  os << "collisions=" << m.collisions << "\n";
  os << "cav_collisions=" << m.cav_collisions << "\n";
  os << "throughput_vph=" << m.throughput_vph << "\n";
  os << "fallbacks=" << m.fallbacks << "\n";
  os << "arrivals=" << m.arrivals << "\n";
  os << "spawned=" << m.spawned << "\n";
  os << "retired=" << m.retired << "\n";
  os << "solve_count=" << m.solve_count << "\n";
  os << "solve_time_mean_ms=" << m.solve_time_mean_ms << "\n";
  os << "solve_time_std_ms=" << m.solve_time_std_ms << "\n";
  for (const auto& [id, n] : m.attempts_by_cav)
    os << "cav." << id << ".attempts=" << n << "\n";
  for (const auto& [id, n] : m.successes_by_cav)
    os << "cav." << id << ".successes=" << n << "\n";
}

MetricsRecord run_scenario(const ScenarioConfig& cfg,
                           const std::string& out_dir) {
  fs::create_directories(out_dir);
  Simulation sim(cfg);
  if (cfg.log_trajectory)
    sim.open_trajectory((fs::path(out_dir) / "trajectory.csv").string());
  sim.run();
  MetricsRecord m = sim.metrics();
  write_metrics_text(cfg, m, (fs::path(out_dir) / "metrics.txt").string());
  std::string csv_path = (fs::path(out_dir) / "metrics.csv").string();
  std::string tmp = csv_path + ".tmp";
  {
    std::ofstream os(tmp);
    os << metrics_csv_header() << "\n";
    os << metrics_csv_row(cfg, 0, m) << "\n";
  }
  fs::rename(tmp, csv_path);
  return m;
}

std::uint64_t cell_seed(std::uint64_t base, std::size_t flow_idx,
                        std::size_t pen_idx, int seed_index) {
  return base + 1000003ull * static_cast<std::uint64_t>(seed_index) +
         1009ull * static_cast<std::uint64_t>(flow_idx) +
         101ull * static_cast<std::uint64_t>(pen_idx);
}

std::vector<CellResult> run_sweep(const ScenarioConfig& base,
                                  const SweepSpec& spec,
                                  const std::string& out_dir) {
  fs::create_directories(fs::path(out_dir) / "runs");
  std::vector<CellResult> results;

  for (std::size_t fi = 0; fi < spec.flows.size(); ++fi) {
    for (std::size_t pi = 0; pi < spec.penetrations.size(); ++pi) {
      for (InfoMode mode : spec.modes) {
        for (int si = 0; si < spec.seeds; ++si) {
          ScenarioConfig cfg = base;
          cfg.flow_rate = spec.flows[fi];
          cfg.cav_penetration = spec.penetrations[pi];
          cfg.info_mode = mode;
          cfg.seed = cell_seed(base.seed, fi, pi, si);
          cfg.log_trajectory = false;  // sweep cells keep metrics only

          fs::path run_dir =
              fs::path(out_dir) / "runs" /
              cell_dir_name(cfg.flow_rate, cfg.cav_penetration, mode) /
              ("seed" + std::to_string(si));
          fs::path csv_path = run_dir / "metrics.csv";

          CellResult cell;
          cell.flow = cfg.flow_rate;
          cell.penetration = cfg.cav_penetration;
          cell.mode = mode;
          cell.seed_index = si;
          cell.seed = cfg.seed;

          bool reused = false;
          if (fs::exists(csv_path)) {
            std::ifstream in(csv_path);
            std::string header, row;
            if (std::getline(in, header) && std::getline(in, row)) {
              CellResult parsed;
              if (parse_metrics_csv_row(row, parsed)) {
                cell.metrics = parsed.metrics;
                reused = true;
              }
            }
          }
          if (!reused) {
            fs::create_directories(run_dir);
            cell.metrics = run_scenario(cfg, run_dir.string());
          }
          results.push_back(std::move(cell));
        }
      }
    }
  }

  // cells.csv: every run, in sweep order
  {
    std::string path = (fs::path(out_dir) / "cells.csv").string();
    std::ofstream os(path + ".tmp");
    os << metrics_csv_header() << "\n";
    for (const auto& cell : results) {
      ScenarioConfig cfg = base;
      cfg.flow_rate = cell.flow;
      cfg.cav_penetration = cell.penetration;
      cfg.info_mode = cell.mode;
      cfg.seed = cell.seed;
      os << metrics_csv_row(cfg, cell.seed_index, cell.metrics) << "\n";
    }
    os.close();
    fs::rename(path + ".tmp", path);
  }

  // aggregate.csv: per-cell means and stds for plotting
  {
    std::string path = (fs::path(out_dir) / "aggregate.csv").string();
    std::ofstream os(path + ".tmp");
    os << "flow_rate,penetration,mode,runs,success_ratio_mean,"
          "success_ratio_std,attempts_per_cav_mean,attempts_per_cav_std,"
          "successes_mean,attempts_mean,collisions_total,"
          "cav_collisions_total,throughput_mean\n";
    for (std::size_t fi = 0; fi < spec.flows.size(); ++fi) {
      for (std::size_t pi = 0; pi < spec.penetrations.size(); ++pi) {
        for (InfoMode mode : spec.modes) {
          Welford ratio, apc, succ, att, thr;
          long coll = 0, cav_coll = 0, runs = 0;
          for (const auto& cell : results) {
            if (cell.flow != spec.flows[fi] ||
                cell.penetration != spec.penetrations[pi] ||
                cell.mode != mode)
              continue;
            runs++;
            ratio.add(cell.metrics.success_ratio());
            apc.add(cell.metrics.attempts_per_cav());
            succ.add(static_cast<double>(cell.metrics.successes));
            att.add(static_cast<double>(cell.metrics.attempts));
            thr.add(cell.metrics.throughput_vph);
            coll += cell.metrics.collisions;
            cav_coll += cell.metrics.cav_collisions;
          }
          char buf[384];
          std::snprintf(buf, sizeof(buf),
                        "%g,%g,%s,%ld,%.6f,%.6f,%.6f,%.6f,%.4f,%.4f,%ld,%ld,"
                        "%.4f",
                        spec.flows[fi], spec.penetrations[pi],
                        to_string(mode).c_str(), runs, ratio.mean,
                        ratio.std_dev(), apc.mean, apc.std_dev(), succ.mean,
                        att.mean, coll, cav_coll, thr.mean);
          os << buf << "\n";
        }
      }
    }
    os.close();
    fs::rename(path + ".tmp", path);
  }

  return results;
}

}  // namespace ovtsim
