#pragma once

#include <string>
#include <vector>

#include "ovtsim/config.hpp"
#include "ovtsim/engine.hpp"

namespace ovtsim {

// One sweep cell-run result, as written to cells.csv.
struct CellResult {
  double flow = 0;
  double penetration = 0;
  InfoMode mode = InfoMode::Cooperative;
  int seed_index = 0;
  std::uint64_t seed = 0;
  MetricsRecord metrics;
};

// Runs one scenario; writes trajectory.csv (when enabled), metrics.txt and
// metrics.csv under out_dir. Returns the collected metrics.
MetricsRecord run_scenario(const ScenarioConfig& cfg,
                           const std::string& out_dir);

// Deterministic per-run seed: independent of the info mode so that modes
// of one cell share the same traffic realization.
std::uint64_t cell_seed(std::uint64_t base, std::size_t flow_idx,
                        std::size_t pen_idx, int seed_index);

// Full sweep: one run per (flow, penetration, mode, seed). Completed runs
// (their metrics.csv already present) are reloaded, not re-run. Writes
// cells.csv and aggregate.csv under out_dir. Returns all cell results.
std::vector<CellResult> run_sweep(const ScenarioConfig& base,
                                  const SweepSpec& spec,
                                  const std::string& out_dir);

// cells.csv header and row formatting (also used by the resume loader).
std::string metrics_csv_header();
std::string metrics_csv_row(const ScenarioConfig& cfg, int seed_index,
                            const MetricsRecord& m);
bool parse_metrics_csv_row(const std::string& line, CellResult& out);

void write_metrics_text(const ScenarioConfig& cfg, const MetricsRecord& m,
                        const std::string& path);

}  // namespace ovtsim
