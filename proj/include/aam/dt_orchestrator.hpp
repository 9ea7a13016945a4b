#pragma once

// Twin-loop controller: a digital twin plans communication schedules and
// flight gains ahead of the fleet, delivers them to the physical world, and
// periodically resynchronizes its state from physical reports. The physical
// world carries obstacles and process noise the twin does not model, so the
// twin's prediction drifts between syncs.

#include <cstdint>
#include <vector>

#include "aam/cpf_flight.hpp"
#include "aam/dqn_agent.hpp"
#include "aam/phase_opt.hpp"
#include "aam/power_alloc.hpp"
#include "aam/sim_channel.hpp"

namespace aam {

struct Scenario;

enum class BCDMode { Joint, PowerOnly, PhaseOnly };

struct BCDOptions {
  BCDMode mode = BCDMode::Joint;
  // a round that improves the sum rate by less than this ends the alternation
  double tolerance = 1e-3;
  int max_rounds = 50;
  // initial phase draw when no warm start is supplied; PowerOnly freezes
  // phases at zero and PhaseOnly freezes power at a uniform split instead
  std::uint64_t phase_seed = 0;
  const PhaseSchedule* warm_phases = nullptr;
  PowerSolveOptions power{};
  PhaseOptOptions phase{};
};

struct BCDResult {
  PowerSchedule power;
  PhaseSchedule phases;
  std::vector<double> trace;  // sum rate before round 1 and after each round
  bool stalled = false;       // three rounds in a row without improvement
};

// Alternates the power and phase solvers on the channel induced by the given
// trajectory until the sum rate stops improving.
BCDResult bcd_communication(const Trajectory& traj, const SimGeometry& geometry,
                            const StationConfig& station, const ChannelParams& channel,
                            const BCDOptions& opt = {});

struct DeduceResult {
  CPFParams gains;                  // tuner output delivered to the fleet
  Trajectory plan;                  // rollout of those gains from the start state
  std::vector<FlightState> states;  // rollout states, one per plan point
  TrainingResult training;          // traces of the last training round
};

// Tunes the potential-field gains against the given schedules, then rolls the
// winning gains out from the start state to produce the twin's flight plan.
DeduceResult deduce_flight(const TrainingEnv& env, const DQNConfig& cfg,
                           const FlightState& start, int training_rounds = 1,
                           const QNetwork* warm_start = nullptr);

struct LoopConfig {
  int planning_rounds = 3;   // plan/fly segments across the flight
  double tolerance = 1e-3;   // BCD stop threshold per planning round
  int training_rounds = 1;   // gain-tuner runs per planning round
  double sync_count = 0.0;   // state synchronizations spread across the run
  double process_noise = 1.5;  // physical position noise per slot, meters
  // tuner episodes per planning round; 0 falls back to the scenario's
  // training configuration
  int training_episodes = 200;
  std::uint64_t twin_seed = 0;      // folded into the twin's random streams
  std::uint64_t physical_seed = 0;  // folded into the noise stream
  void validate() const;
};

struct TwinState {
  Trajectory plan;       // predicted positions per slot
  PowerSchedule power;   // delivered transmit powers
  PhaseSchedule phases;  // delivered phase program
  CPFParams gains;       // delivered flight gains
  FlightState twin;      // twin's current believed fleet state
  FlightState physical;  // physical fleet state
  std::vector<std::vector<double>> divergence;  // per sync, per craft, meters
};

// Copies the physical state into the twin, logging the per-craft position gap
// that had accumulated since the last sync.
std::vector<double> synchronize(TwinState& st);

struct RunReport {
  MatrixXd rates;       // slot x craft, nats, at the physical positions
  Trajectory twin;      // planned positions
  Trajectory physical;  // realized positions
  double mean_deviation = 0.0;
  double min_separation = 0.0;
  std::vector<std::vector<double>> divergence;
  CPFParams final_gains;
  std::vector<double> bcd_trace;       // planning-round objective values, concatenated
  std::vector<double> reward_trace;    // tuner episode rewards, concatenated
  std::vector<double> deviation_trace; // tuner episode deviations, concatenated
  bool stalled = false;
  double total_rate() const { return rates.sum(); }
};

// Full twin loop: plan, deliver, fly, synchronize. Aborts with a diagnostic
// when a delivered schedule or a physical step violates its constraints.
RunReport run_digital_twin(const Scenario& sc);

}  // namespace aam
