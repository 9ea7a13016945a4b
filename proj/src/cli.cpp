#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "aam/scenario_io.hpp"

namespace aam {

namespace {

std::string fmt12(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  for (char* c = buf; *c; ++c)
    if (*c == ',') *c = '.';
  return buf;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::invalid_argument("output path: cannot write " + path);
  out << text;
}

// Every craft rides the centerline; the planner's round-zero prediction.
Trajectory centerline_plan(const Scenario& sc) {
  const int fleet = static_cast<int>(sc.corridor.entries.size());
  Trajectory t = Trajectory::zeros(fleet, sc.num_slots);
  const double length = sc.corridor.total_length();
  for (int n = 0; n <= sc.num_slots; ++n) {
    const Vector3d p = sc.corridor.point_at(length * n / sc.num_slots);
    for (int m = 0; m < fleet; ++m) t.at(m, n) = p;
  }
  return t;
}

double min_pairwise_separation(const Trajectory& t) {
  if (t.num_evtols < 2) return 0.0;
  double best = std::numeric_limits<double>::infinity();
  for (int n = 0; n <= t.num_slots; ++n)
    for (int i = 0; i < t.num_evtols; ++i)
      for (int j = i + 1; j < t.num_evtols; ++j)
        best = std::min(best, (t.at(i, n) - t.at(j, n)).norm());
  return best;
}

BCDResult run_bcd(const Scenario& sc, const Trajectory& plan, BCDMode mode,
                  std::uint64_t phase_seed) {
  BCDOptions opt;
  opt.mode = mode;
  opt.tolerance = sc.loop.tolerance;
  opt.phase_seed = phase_seed;
  opt.power.total_power = sc.total_power;
  return bcd_communication(plan, sc.geometry, sc.station, sc.channel, opt);
}

RunReport report_for_plan(const Scenario& sc, const Trajectory& plan,
                          const BCDResult& res) {
  RunReport rep;
  const LinkContext ctx =
      build_link_context(plan, sc.geometry, sc.station, sc.channel);
  rep.rates = sinr_and_rates(effective_gains(ctx, res.phases), res.power,
                             sc.channel.noise_power)
                  .rate;
  rep.twin = plan;
  rep.physical = plan;
  rep.mean_deviation = centerline_deviation(plan, sc.corridor);
  rep.min_separation = min_pairwise_separation(plan);
  rep.final_gains = sc.initial_gains;
  rep.bcd_trace = res.trace;
  rep.stalled = res.stalled;
  return rep;
}

int cmd_optimize(const Scenario& sc, BCDMode mode, const std::string& out,
                 const std::string& format) {
  const Trajectory plan = centerline_plan(sc);
  std::mt19937_64 master(sc.seed);
  const BCDResult res = run_bcd(sc, plan, mode, master());
  const RunReport rep = report_for_plan(sc, plan, res);
  export_report(rep, out, format);
  const char* name = mode == BCDMode::Joint      ? "joint"
                     : mode == BCDMode::PowerOnly ? "power-only"
                                                  : "phase-only";
  std::printf("mode %s\nrounds %zu\ntotal_rate_nats %s\n", name, res.trace.size(),
              fmt12(rep.total_rate()).c_str());
  return 0;
}

int cmd_baseline(const Scenario& sc, const std::string& out,
                 const std::string& format) {
  const Trajectory plan = centerline_plan(sc);
  std::mt19937_64 master(sc.seed);
  const BCDResult res = run_bcd(sc, plan, BCDMode::Joint, master());
  const RunReport rep = report_for_plan(sc, plan, res);
  export_report(rep, out, format);

  // Bare array link, same power budget and solver.
  const EffectiveGains mimo = mimo_effective_gains(plan, sc.station, sc.channel);
  PowerSolveOptions popt;
  popt.total_power = sc.total_power;
  const PowerSolveResult pres = prox_linear(mimo, sc.channel.noise_power, popt);
  const double mimo_total =
      sinr_and_rates(mimo, pres.power, sc.channel.noise_power).rate.sum();

  std::string cmp = "metric,value\n";
  cmp += "sim_total_rate_nats," + fmt12(rep.total_rate()) + "\n";
  cmp += "mimo_total_rate_nats," + fmt12(mimo_total) + "\n";
  write_text(out + "/baseline.csv", cmp);
  std::printf("sim_total_rate_nats %s\nmimo_total_rate_nats %s\n",
              fmt12(rep.total_rate()).c_str(), fmt12(mimo_total).c_str());
  return 0;
}

int cmd_sweep(const Scenario& sc, const std::vector<int>& layers,
              const std::vector<int>& atoms, const std::vector<double>& thicknesses,
              const std::string& out, const std::string& format) {
  std::mt19937_64 master(sc.seed);
  const std::uint64_t phase_seed = master();
  const Trajectory plan = centerline_plan(sc);

  struct Row {
    int layers, atoms;
    double thickness, spacing, rate;
  };
  std::vector<Row> rows;
  for (int L : layers)
    for (int K : atoms)
      for (double T : thicknesses) {
        Scenario cell = sc;
        cell.geometry.num_layers = L;
        cell.geometry.atoms_per_layer = K;
        cell.geometry.thickness = T;
        cell.geometry.validate();
        const BCDResult res = run_bcd(cell, plan, BCDMode::Joint, phase_seed);
        rows.push_back({L, K, T, cell.geometry.layer_spacing(), res.trace.back()});
      }

  std::filesystem::create_directories(out);
  if (format == "csv") {
    std::string body = "layers,atoms,thickness_m,spacing_m,total_rate_nats\n";
    for (const Row& r : rows)
      body += std::to_string(r.layers) + "," + std::to_string(r.atoms) + "," +
              fmt12(r.thickness) + "," + fmt12(r.spacing) + "," + fmt12(r.rate) +
              "\n";
    write_text(out + "/sweep.csv", body);
  } else {
    std::string body = "[";
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const Row& r = rows[i];
      if (i) body += ",";
      body += "\n  {\"layers\": " + std::to_string(r.layers) +
              ", \"atoms\": " + std::to_string(r.atoms) +
              ", \"thickness_m\": " + fmt12(r.thickness) +
              ", \"spacing_m\": " + fmt12(r.spacing) +
              ", \"total_rate_nats\": " + fmt12(r.rate) + "}";
    }
    body += "\n]\n";
    write_text(out + "/sweep.json", body);
  }
  std::printf("cells %zu\n", rows.size());
  return 0;
}

int cmd_train(const Scenario& sc, const std::string& out, const std::string& format) {
  const int fleet = static_cast<int>(sc.corridor.entries.size());
  TrainingEnv env;
  env.corridor = sc.corridor;
  env.kinematics = sc.kinematics;
  env.initial_params = sc.initial_gains;
  env.power = PowerSchedule::uniform(sc.num_slots, fleet, sc.total_power / fleet);
  env.phases = PhaseSchedule::zeros(sc.num_slots, sc.geometry.num_layers,
                                    sc.geometry.atoms_per_layer);
  env.geometry = sc.geometry;
  env.station = sc.station;
  env.channel = sc.channel;
  env.reward_params = sc.reward;
  env.use_rate_reward = sc.comm_reward;

  DQNConfig cfg = sc.dqn;
  std::mt19937_64 master(sc.seed);
  cfg.seed = master();

  FlightState start;
  start.positions = sc.corridor.entries;
  start.velocities.assign(fleet, Vector3d::Zero());
  const DeduceResult ded = deduce_flight(env, cfg, start, sc.loop.training_rounds);

  RunReport rep;
  const LinkContext ctx =
      build_link_context(ded.plan, sc.geometry, sc.station, sc.channel);
  rep.rates = sinr_and_rates(effective_gains(ctx, env.phases), env.power,
                             sc.channel.noise_power)
                  .rate;
  rep.twin = ded.plan;
  rep.physical = ded.plan;
  rep.mean_deviation = centerline_deviation(ded.plan, sc.corridor);
  rep.min_separation = min_pairwise_separation(ded.plan);
  rep.final_gains = ded.gains;
  rep.reward_trace = ded.training.reward_trace;
  rep.deviation_trace = ded.training.deviation_trace;
  export_report(rep, out, format);
  std::printf("episodes %zu\nbest_episode %d\nmean_deviation_m %s\n",
              rep.reward_trace.size(), ded.training.best_episode,
              fmt12(rep.mean_deviation).c_str());
  return 0;
}

int cmd_run(const Scenario& sc, const std::string& out, const std::string& format) {
  const RunReport rep = run_digital_twin(sc);
  export_report(rep, out, format);
  std::printf("total_rate_nats %s\nmean_deviation_m %s\nmin_separation_m %s\n",
              fmt12(rep.total_rate()).c_str(), fmt12(rep.mean_deviation).c_str(),
              fmt12(rep.min_separation).c_str());
  return 0;
}

}  // namespace

int cli_dispatch(int argc, char** argv) {
  CLI::App app{"SIM-assisted air corridor planner"};
  app.require_subcommand(1);

  std::string scenario_path, out_dir = "out", format = "csv";
  std::uint64_t seed = 0;
  app.add_option("--scenario", scenario_path, "scenario JSON file");
  app.add_option("--out", out_dir, "output directory")->capture_default_str();
  auto* format_opt = app.add_option("--format", format, "export format")
                         ->check(CLI::IsMember({"csv", "json"}))
                         ->capture_default_str();
  (void)format_opt;
  auto* seed_opt = app.add_option("--seed", seed, "override the scenario seed");

  auto* opt_sim = app.add_subcommand(
      "optimize-sim", "power and phase optimization along the centerline");
  bool power_only = false, phase_only = false;
  auto* po = opt_sim->add_flag("--power-only", power_only, "freeze phases at zero");
  auto* ph =
      opt_sim->add_flag("--phase-only", phase_only, "freeze power at uniform");
  po->excludes(ph);
  opt_sim->fallthrough();

  auto* baseline = app.add_subcommand(
      "baseline-mimo", "compare the stack against a bare array link");
  baseline->fallthrough();

  auto* sweep =
      app.add_subcommand("sweep-geometry", "rate across stack geometries");
  std::vector<int> layers = {3, 5, 7};
  std::vector<int> atoms = {4, 9, 16};
  std::vector<double> thicknesses = {0.03, 0.05, 0.15};
  sweep->add_option("--layers", layers, "layer counts")->delimiter(',');
  sweep->add_option("--atoms", atoms, "atoms per layer")->delimiter(',');
  sweep->add_option("--thickness", thicknesses, "stack thicknesses, m")
      ->delimiter(',');
  sweep->fallthrough();

  auto* train = app.add_subcommand(
      "train-cpf", "tune flight gains on the obstacle-free corridor");
  train->fallthrough();

  auto* run = app.add_subcommand("run-dt", "closed planning and flight loop");
  double sync_count = 0.0;
  bool no_comm_reward = false;
  int obstacle_count = 0;
  auto* sync_opt =
      run->add_option("--sync-count", sync_count, "state syncs spread over the run")
          ->check(CLI::NonNegativeNumber);
  run->add_flag("--no-comm-reward", no_comm_reward,
                "drop the rate term from the tuning reward");
  auto* obs_opt =
      run->add_option("--obstacles", obstacle_count, "keep only the first k obstacles")
          ->check(CLI::NonNegativeNumber);
  run->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    Scenario sc =
        scenario_path.empty() ? default_scenario() : load_scenario(scenario_path);
    if (seed_opt->count() > 0) sc.seed = seed;
    sc.validate();

    if (opt_sim->parsed()) {
      const BCDMode mode = power_only    ? BCDMode::PowerOnly
                           : phase_only  ? BCDMode::PhaseOnly
                                         : BCDMode::Joint;
      return cmd_optimize(sc, mode, out_dir, format);
    }
    if (baseline->parsed()) return cmd_baseline(sc, out_dir, format);
    if (sweep->parsed()) return cmd_sweep(sc, layers, atoms, thicknesses, out_dir, format);
    if (train->parsed()) return cmd_train(sc, out_dir, format);
    if (run->parsed()) {
      if (sync_opt->count() > 0) sc.loop.sync_count = sync_count;
      if (no_comm_reward) sc.comm_reward = false;
      if (obs_opt->count() > 0) {
        if (obstacle_count > static_cast<int>(sc.obstacles.size()))
          throw std::invalid_argument(
              "obstacles: the scenario defines fewer obstacles than requested");
        sc.obstacles.resize(obstacle_count);
      }
      return cmd_run(sc, out_dir, format);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}

}  // namespace aam
