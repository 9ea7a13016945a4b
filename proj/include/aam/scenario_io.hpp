#pragma once

// Scenario files, run exports, and the command-line surface. A scenario file
// fully determines a run, seeds included; exports carry 12 significant digits
// and are locale independent.

#include <cstdint>
#include <string>
#include <vector>

#include "aam/dt_orchestrator.hpp"

namespace aam {

// One fully seeded experiment. Linear units throughout: mW for powers,
// meters for lengths; scenario files may also spell the channel fields in
// dB / dBm with a suffixed key.
struct Scenario {
  SimGeometry geometry;
  StationConfig station;
  ChannelParams channel;
  Corridor corridor;
  std::vector<Obstacle> obstacles;
  KinematicParams kinematics;
  CPFParams initial_gains;
  RewardParams reward;
  DQNConfig dqn;
  LoopConfig loop;
  int num_slots = 30;         // flight horizon N
  double total_power = 10.0;  // per-slot transmit budget, mW
  bool comm_reward = true;    // include the rate term in the tuner reward
  double collision_c1 = 0.0;  // collision-penalty exponent offset
  double collision_c2 = -0.05;  // collision-penalty distance slope
  std::uint64_t seed = 0;       // master seed for every derived stream
  void validate() const;
};

// Desk-scale defaults: a bent three-craft corridor served by a five-layer
// four-atom stack.
Scenario default_scenario();

// Reads a scenario file; missing fields keep their defaults, an empty file
// yields default_scenario(). Rejects unknown keys and invalid values with the
// offending field named.
Scenario load_scenario(const std::string& path);

// Writes a scenario file that load_scenario reproduces exactly.
void save_scenario(const Scenario& sc, const std::string& path);

// Writes rates.csv, traj.csv, metrics.csv, and traces.csv ("csv"), or
// report.json ("json"), into the given directory.
void export_report(const RunReport& report, const std::string& out_dir,
                   const std::string& format);

// Reads a report.json written by export_report back into memory.
RunReport import_report_json(const std::string& path);

// Entry point behind the command-line binary; returns the process exit code.
int cli_dispatch(int argc, char** argv);

}  // namespace aam
