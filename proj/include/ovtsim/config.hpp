#pragma once

#include <map>
#include <string>
#include <vector>

#include "ovtsim/engine.hpp"

namespace ovtsim {

struct Diagnostic {
  std::string key;
  std::string message;
};

struct SweepSpec {
  std::vector<double> flows;         // veh/min per direction
  std::vector<double> penetrations;  // [0,1]
  std::vector<InfoMode> modes;
  int seeds = 5;  // runs per cell
  std::string out_dir;

  bool defined() const {
    return !flows.empty() || !penetrations.empty() || !modes.empty();
  }
};

// Flat key=value format with section prefixes (road.length=2000).
// '#' starts a comment; blank lines ignored.
bool parse_config_text(const std::string& text,
                       std::map<std::string, std::string>& out,
                       std::vector<Diagnostic>& diags);

// Apply parsed keys onto the defaults; unknown keys and malformed values
// become diagnostics.
void apply_config(const std::map<std::string, std::string>& kv,
                  ScenarioConfig& cfg, SweepSpec& sweep,
                  std::vector<Diagnostic>& diags);

// Every config-type invariant, with key paths in the diagnostics.
std::vector<Diagnostic> validate_scenario(const ScenarioConfig& cfg);
std::vector<Diagnostic> validate_sweep(const SweepSpec& spec);

// Parse + apply + validate. Returns false when diags contains errors.
bool load_config_file(const std::string& path, ScenarioConfig& cfg,
                      SweepSpec& sweep, std::vector<Diagnostic>& diags);

}  // namespace ovtsim
