#include "aam/dt_orchestrator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>

#include "aam/scenario_io.hpp"

namespace aam {

void LoopConfig::validate() const {
  if (planning_rounds < 1)
    throw std::invalid_argument("loop.planning_rounds: must be positive");
  if (!(tolerance > 0.0)) throw std::invalid_argument("loop.tolerance: must be positive");
  if (training_rounds < 1)
    throw std::invalid_argument("loop.training_rounds: must be positive");
  if (!(sync_count >= 0.0))
    throw std::invalid_argument("loop.sync_count: must be nonnegative");
  if (!(process_noise >= 0.0))
    throw std::invalid_argument("loop.process_noise: must be nonnegative");
  if (training_episodes < 0)
    throw std::invalid_argument("loop.training_episodes: must be nonnegative");
}

BCDResult bcd_communication(const Trajectory& traj, const SimGeometry& geometry,
                            const StationConfig& station, const ChannelParams& channel,
                            const BCDOptions& opt) {
  if (!(opt.tolerance >= 0.0))
    throw std::invalid_argument("bcd.tolerance: must be nonnegative");
  if (opt.max_rounds < 1) throw std::invalid_argument("bcd.max_rounds: must be positive");

  const LinkContext ctx = build_link_context(traj, geometry, station, channel);
  const int slots = ctx.num_slots, fleet = ctx.num_evtols;
  const int layers = ctx.num_layers, atoms = ctx.num_atoms;

  BCDResult res;
  if (opt.warm_phases) {
    if (opt.warm_phases->num_slots != slots || opt.warm_phases->num_layers != layers ||
        opt.warm_phases->num_atoms != atoms)
      throw std::invalid_argument("warm_phases: shape does not match the trajectory horizon");
    res.phases = *opt.warm_phases;
  } else {
    res.phases = PhaseSchedule::random(slots, layers, atoms, opt.phase_seed);
  }
  res.power = PowerSchedule::uniform(slots, fleet, opt.power.total_power / fleet);

  double objective = rate_objective(ctx, res.phases, res.power);
  res.trace.push_back(objective);
  int flat_rounds = 0;
  for (int round = 0; round < opt.max_rounds; ++round) {
    if (opt.mode != BCDMode::PhaseOnly) {
      const EffectiveGains gains = effective_gains(ctx, res.phases);
      const PowerSolveResult pr = prox_linear(gains, channel.noise_power, opt.power);
      const double candidate = rate_objective(ctx, res.phases, pr.power);
      // the block update must never lose ground; a weaker solve is skipped
      if (candidate >= objective) {
        res.power = pr.power;
        objective = candidate;
      }
    }
    if (opt.mode != BCDMode::PowerOnly) {
      PhaseOptResult ph = gradient_ascent(ctx, res.phases, res.power, opt.phase);
      res.phases = std::move(ph.phases);
      objective = ph.objective_trace.back();
    }
    const double gain = objective - res.trace.back();
    res.trace.push_back(objective);
    if (gain <= 0.0) {
      if (++flat_rounds >= 3) {
        res.stalled = true;
        break;
      }
    } else {
      flat_rounds = 0;
    }
    if (gain < opt.tolerance) break;
  }
  return res;
}

DeduceResult deduce_flight(const TrainingEnv& env, const DQNConfig& cfg,
                           const FlightState& start, int training_rounds,
                           const QNetwork* warm_start) {
  if (training_rounds < 1)
    throw std::invalid_argument("training_rounds: must be positive");
  const int fleet = static_cast<int>(env.corridor.entries.size());
  if (static_cast<int>(start.positions.size()) != fleet ||
      static_cast<int>(start.velocities.size()) != fleet)
    throw std::invalid_argument("start: fleet size must match the corridor entries");

  DeduceResult res;
  TrainingEnv train_env = env;
  train_env.start = start;  // tune the gains for the flight actually ahead
  const QNetwork* warm = warm_start;
  DQNConfig round_cfg = cfg;
  for (int i = 0; i < training_rounds; ++i) {
    res.training = run_training(train_env, round_cfg, warm);
    warm = &res.training.net;
    round_cfg.seed += 0x9e3779b97f4a7c15ull;  // decorrelate successive rounds
  }
  res.gains = res.training.best_params;

  const int horizon = env.power.num_slots;
  FlightState cur = start;
  res.states.push_back(cur);
  res.plan = Trajectory::zeros(fleet, horizon);
  for (int m = 0; m < fleet; ++m) res.plan.at(m, 0) = cur.positions[m];
  for (int t = 0; t < horizon; ++t) {
    std::vector<Vector3d> targets(fleet);
    for (int i = 0; i < fleet; ++i)
      targets[i] = moving_target(env.corridor, cur.positions[i], i, env.kinematics);
    const auto acc = composite_acceleration(cur, res.gains, targets, env.obstacles);
    cur = step_kinematics(cur, acc, env.kinematics, env.corridor);
    res.states.push_back(cur);
    for (int m = 0; m < fleet; ++m) res.plan.at(m, t + 1) = cur.positions[m];
  }
  return res;
}

std::vector<double> synchronize(TwinState& st) {
  const std::size_t fleet = st.physical.positions.size();
  if (st.twin.positions.size() != fleet)
    throw std::invalid_argument("twin: fleet size must match the physical world");
  std::vector<double> gap(fleet, 0.0);
  for (std::size_t m = 0; m < fleet; ++m)
    gap[m] = (st.twin.positions[m] - st.physical.positions[m]).norm();
  st.twin = st.physical;
  st.divergence.push_back(gap);
  return gap;
}

RunReport run_digital_twin(const Scenario& sc) {
  sc.validate();
  const int slots = sc.num_slots;
  const int fleet = static_cast<int>(sc.corridor.entries.size());
  const int rounds = sc.loop.planning_rounds;

  std::mt19937_64 master(sc.seed);
  std::mt19937_64 twin_rng(master() ^ sc.loop.twin_seed);
  std::mt19937_64 noise_rng(master() ^ sc.loop.physical_seed);
  std::normal_distribution<double> noise(
      0.0, sc.loop.process_noise > 0.0 ? sc.loop.process_noise : 1.0);

  TwinState st;
  st.physical.positions = sc.corridor.entries;
  st.physical.velocities.assign(fleet, Vector3d::Zero());
  st.twin = st.physical;
  st.gains = sc.initial_gains;
  st.power = PowerSchedule::uniform(slots, fleet, sc.total_power / fleet);
  st.phases =
      PhaseSchedule::zeros(slots, sc.geometry.num_layers, sc.geometry.atoms_per_layer);

  // the first planning pass prices the channel along the corridor centerline
  st.plan = Trajectory::zeros(fleet, slots);
  const double length = sc.corridor.total_length();
  for (int n = 0; n <= slots; ++n) {
    const Vector3d c = sc.corridor.point_at(length * n / slots);
    for (int m = 0; m < fleet; ++m) st.plan.at(m, n) = c;
  }

  RunReport rep;
  rep.physical = Trajectory::zeros(fleet, slots);
  for (int m = 0; m < fleet; ++m) rep.physical.at(m, 0) = st.physical.positions[m];

  const int syncs = static_cast<int>(std::llround(sc.loop.sync_count));
  // spread the requested sync count evenly over the internal round boundaries
  const auto sync_fires = [&](int boundary) {
    if (rounds < 2 || syncs <= 0) return false;
    const long hi = static_cast<long>(boundary) * syncs / (rounds - 1);
    const long lo = static_cast<long>(boundary - 1) * syncs / (rounds - 1);
    return hi > lo;
  };

  QNetwork net;
  bool have_net = false;
  int slot = 0;
  for (int round = 0; round < rounds; ++round) {
    const int segment = slots / rounds + (round < slots % rounds ? 1 : 0);
    if (round > 0 && sync_fires(round)) synchronize(st);

    const int rem = slots - slot;
    Trajectory predicted = Trajectory::zeros(fleet, rem);
    for (int m = 0; m < fleet; ++m)
      for (int n = 0; n <= rem; ++n) predicted.at(m, n) = st.plan.at(m, slot + n);

    BCDOptions bopt;
    bopt.tolerance = sc.loop.tolerance;
    bopt.power.total_power = sc.total_power;
    bopt.phase_seed = twin_rng();
    PhaseSchedule warm = PhaseSchedule::zeros(rem, sc.geometry.num_layers,
                                              sc.geometry.atoms_per_layer);
    if (round > 0) {
      for (int n = 0; n < rem; ++n)
        for (int l = 0; l < sc.geometry.num_layers; ++l)
          for (int k = 0; k < sc.geometry.atoms_per_layer; ++k)
            warm.at(n, l, k) = st.phases.at(slot + n, l, k);
      bopt.warm_phases = &warm;
    }
    const BCDResult bcd =
        bcd_communication(predicted, sc.geometry, sc.station, sc.channel, bopt);
    rep.bcd_trace.insert(rep.bcd_trace.end(), bcd.trace.begin(), bcd.trace.end());
    rep.stalled = rep.stalled || bcd.stalled;

    for (int n = 0; n < rem; ++n) {
      if (!(bcd.power.slot_sum(n) <= sc.total_power))
        throw std::runtime_error("aborting: delivered power exceeds the budget at slot " +
                                 std::to_string(slot + n));
      for (int m = 0; m < fleet; ++m) {
        if (!(bcd.power.at(n, m) >= 0.0))
          throw std::runtime_error("aborting: negative delivered power at slot " +
                                   std::to_string(slot + n));
        st.power.at(slot + n, m) = bcd.power.at(n, m);
      }
      for (int l = 0; l < sc.geometry.num_layers; ++l)
        for (int k = 0; k < sc.geometry.atoms_per_layer; ++k)
          st.phases.at(slot + n, l, k) = bcd.phases.at(n, l, k);
    }

    TrainingEnv env;
    env.corridor = sc.corridor;  // the twin flies an obstacle-free replica
    env.kinematics = sc.kinematics;
    env.initial_params = st.gains;
    env.power = bcd.power;
    env.phases = bcd.phases;
    env.geometry = sc.geometry;
    env.station = sc.station;
    env.channel = sc.channel;
    env.reward_params = sc.reward;
    env.use_rate_reward = sc.comm_reward;
    DQNConfig cfg = sc.dqn;
    if (sc.loop.training_episodes > 0) cfg.episodes = sc.loop.training_episodes;
    cfg.seed = twin_rng();
    const DeduceResult deduced = deduce_flight(env, cfg, st.twin, sc.loop.training_rounds,
                                               have_net ? &net : nullptr);
    net = deduced.training.net;
    have_net = true;
    st.gains = deduced.gains;
    rep.reward_trace.insert(rep.reward_trace.end(), deduced.training.reward_trace.begin(),
                            deduced.training.reward_trace.end());
    rep.deviation_trace.insert(rep.deviation_trace.end(),
                               deduced.training.deviation_trace.begin(),
                               deduced.training.deviation_trace.end());
    for (int m = 0; m < fleet; ++m)
      for (int n = 0; n <= rem; ++n) st.plan.at(m, slot + n) = deduced.plan.at(m, n);

    // fly the physical segment under the delivered gains; the corridor
    // pursuit target is computed from the true positions, which the twin
    // only learns about at the next synchronization
    for (int s = 0; s < segment; ++s) {
      const int n = slot + s;
      std::vector<Vector3d> targets(fleet);
      for (int m = 0; m < fleet; ++m)
        targets[m] = moving_target(sc.corridor, st.physical.positions[m], m, sc.kinematics);
      const auto acc = composite_acceleration(st.physical, st.gains, targets, sc.obstacles);
      FlightState next = step_kinematics(st.physical, acc, sc.kinematics, sc.corridor);
      if (sc.loop.process_noise > 0.0) {
        // drift the positions, then re-apply the motion constraints by
        // coasting the perturbed displacement through the integrator
        FlightState drift;
        drift.positions = st.physical.positions;
        drift.velocities.resize(fleet);
        const double dt = sc.kinematics.slot_duration;
        for (int m = 0; m < fleet; ++m) {
          Vector3d q = next.positions[m];
          for (int axis = 0; axis < 3; ++axis) q(axis) += noise(noise_rng);
          drift.velocities[m] = (q - st.physical.positions[m]) / dt;
        }
        const std::vector<Vector3d> coast(fleet, Vector3d::Zero());
        next.positions =
            step_kinematics(drift, coast, sc.kinematics, sc.corridor).positions;
      }
      // obstacles are solid: a step that crosses into a sphere stops at the
      // entry point with the inward radial velocity absorbed, mirroring the
      // corridor-wall treatment; backtracking along the step keeps the
      // displacement within the slot's speed bound
      for (int m = 0; m < fleet; ++m) {
        for (const Obstacle& ob : sc.obstacles) {
          const double guard = ob.radius + 1e-6;
          if ((next.positions[m] - ob.center).norm() >= guard) continue;
          const Vector3d a = st.physical.positions[m];
          const Vector3d d = next.positions[m] - a;
          const double len2 = d.squaredNorm();
          double t = 0.0;
          if (len2 > 0.0) {
            // earliest intersection of the step segment with the guard sphere
            const Vector3d rel = a - ob.center;
            const double b = rel.dot(d);
            const double c = rel.squaredNorm() - guard * guard;
            const double disc = b * b - len2 * c;
            if (disc >= 0.0) t = std::max(0.0, (-b - std::sqrt(disc)) / len2);
          }
          next.positions[m] = a + t * d;
          Vector3d out = next.positions[m] - ob.center;
          const double dist = out.norm();
          if (dist < guard) {
            // the previous position already touched the sphere; nudge out
            out = dist > 0.0 ? Vector3d(out / dist) : Vector3d::UnitZ();
            next.positions[m] = ob.center + guard * out;
          } else {
            out /= dist;
          }
          const double inward = next.velocities[m].dot(out);
          if (inward < 0.0) next.velocities[m] -= inward * out;
        }
      }
      const double step_cap = sc.kinematics.max_speed * sc.kinematics.slot_duration;
      for (int m = 0; m < fleet; ++m) {
        if ((next.positions[m] - st.physical.positions[m]).norm() > step_cap)
          throw std::runtime_error("aborting: speed bound violated at slot " +
                                   std::to_string(n + 1));
        if (sc.corridor.project(next.positions[m]).distance > sc.corridor.radius)
          throw std::runtime_error("aborting: corridor violation at slot " +
                                   std::to_string(n + 1));
        rep.physical.at(m, n + 1) = next.positions[m];
      }
      st.physical = next;
    }
    slot += segment;
    // the twin's cursor advances along its own prediction until the next sync
    st.twin = deduced.states[static_cast<std::size_t>(segment)];
  }

  const LinkContext ctx =
      build_link_context(rep.physical, sc.geometry, sc.station, sc.channel);
  rep.rates = sinr_and_rates(effective_gains(ctx, st.phases), st.power,
                             sc.channel.noise_power)
                  .rate;
  rep.twin = st.plan;
  rep.mean_deviation = centerline_deviation(rep.physical, sc.corridor);
  double min_sep = std::numeric_limits<double>::infinity();
  for (int n = 0; n <= slots; ++n)
    for (int i = 0; i < fleet; ++i)
      for (int j = i + 1; j < fleet; ++j)
        min_sep = std::min(min_sep,
                           (rep.physical.at(i, n) - rep.physical.at(j, n)).norm());
  rep.min_separation = fleet > 1 ? min_sep : 0.0;
  rep.divergence = st.divergence;
  rep.final_gains = st.gains;
  return rep;
}

}  // namespace aam
