#include "aam/scenario_io.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace aam {

namespace {

using nlohmann::json;

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

// 12 significant digits, locale independent
std::string fmt12(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  for (char* c = buf; *c; ++c)
    if (*c == ',') *c = '.';
  return buf;
}

Vector3d vec3(const json& a, const std::string& field) {
  if (!a.is_array() || a.size() != 3)
    throw std::invalid_argument(field + ": must be an [x, y, z] triple");
  return Vector3d(a[0].get<double>(), a[1].get<double>(), a[2].get<double>());
}

json vec3_json(const Vector3d& v) { return json::array({v(0), v(1), v(2)}); }

std::vector<double> dvec(const json& a) { return a.get<std::vector<double>>(); }

void read_geometry(const json& j, SimGeometry& g) {
  for (const auto& [key, val] : j.items()) {
    if (key == "num_layers")
      g.num_layers = val.get<int>();
    else if (key == "atoms_per_layer")
      g.atoms_per_layer = val.get<int>();
    else if (key == "wavelength_m")
      g.wavelength = val.get<double>();
    else if (key == "thickness_m")
      g.thickness = val.get<double>();
    else if (key == "atom_size_x_m")
      g.atom_size_x = val.get<double>();
    else if (key == "atom_size_y_m")
      g.atom_size_y = val.get<double>();
    else if (key == "num_antennas")
      g.num_antennas = val.get<int>();
    else
      throw std::invalid_argument("scenario.geometry." + key + ": unknown field");
  }
}

void read_channel(const json& j, ChannelParams& ch) {
  for (const auto& [key, val] : j.items()) {
    if (key == "ref_path_loss")
      ch.ref_path_loss = val.get<double>();
    else if (key == "ref_path_loss_db")
      ch.ref_path_loss = db_to_linear(val.get<double>());
    else if (key == "path_loss_exponent")
      ch.path_loss_exponent = val.get<double>();
    else if (key == "rician_factor")
      ch.rician_factor = val.get<double>();
    else if (key == "rician_factor_db")
      ch.rician_factor = db_to_linear(val.get<double>());
    else if (key == "noise_power_mw")
      ch.noise_power = val.get<double>();
    else if (key == "noise_power_dbm")
      ch.noise_power = db_to_linear(val.get<double>());
    else
      throw std::invalid_argument("scenario.channel." + key + ": unknown field");
  }
}

void read_corridor(const json& j, Corridor& c) {
  for (const auto& [key, val] : j.items()) {
    if (key == "centerline_m") {
      c.centerline.clear();
      for (const auto& p : val) c.centerline.push_back(vec3(p, "scenario.corridor.centerline_m"));
    } else if (key == "radius_m") {
      c.radius = val.get<double>();
    } else if (key == "entries_m") {
      c.entries.clear();
      for (const auto& p : val) c.entries.push_back(vec3(p, "scenario.corridor.entries_m"));
    } else if (key == "exits_m") {
      c.exits.clear();
      for (const auto& p : val) c.exits.push_back(vec3(p, "scenario.corridor.exits_m"));
    } else {
      throw std::invalid_argument("scenario.corridor." + key + ": unknown field");
    }
  }
}

void read_gains(const json& j, CPFParams& g) {
  for (const auto& [key, val] : j.items()) {
    if (key == "k_target")
      g.k_target = dvec(val);
    else if (key == "k_separation")
      g.k_separation = dvec(val);
    else if (key == "k_communication")
      g.k_communication = dvec(val);
    else if (key == "d_separation_m")
      g.d_separation = val.get<double>();
    else if (key == "d_communication_m")
      g.d_communication = val.get<double>();
    else if (key == "d_maximum_m")
      g.d_maximum = val.get<double>();
    else
      throw std::invalid_argument("scenario.gains." + key + ": unknown field");
  }
}

void read_dqn(const json& j, DQNConfig& d) {
  for (const auto& [key, val] : j.items()) {
    if (key == "learning_rate")
      d.learning_rate = val.get<double>();
    else if (key == "discount")
      d.discount = val.get<double>();
    else if (key == "epsilon_start")
      d.epsilon_start = val.get<double>();
    else if (key == "epsilon_end")
      d.epsilon_end = val.get<double>();
    else if (key == "epsilon_decay_fraction")
      d.epsilon_decay_fraction = val.get<double>();
    else if (key == "batch_size")
      d.batch_size = val.get<int>();
    else if (key == "target_sync_period")
      d.target_sync_period = val.get<int>();
    else if (key == "episodes")
      d.episodes = val.get<int>();
    else if (key == "steps_per_episode")
      d.steps_per_episode = val.get<int>();
    else if (key == "action_delta")
      d.action_delta = val.get<double>();
    else if (key == "buffer_capacity")
      d.buffer_capacity = val.get<std::size_t>();
    else if (key == "input_scale")
      d.input_scale = val.get<double>();
    else if (key == "gradient_clip")
      d.gradient_clip = val.get<double>();
    else if (key == "seed")
      d.seed = val.get<std::uint64_t>();
    else
      throw std::invalid_argument("scenario.dqn." + key + ": unknown field");
  }
}

void read_loop(const json& j, LoopConfig& l) {
  for (const auto& [key, val] : j.items()) {
    if (key == "planning_rounds")
      l.planning_rounds = val.get<int>();
    else if (key == "tolerance")
      l.tolerance = val.get<double>();
    else if (key == "training_rounds")
      l.training_rounds = val.get<int>();
    else if (key == "sync_count")
      l.sync_count = val.get<double>();
    else if (key == "process_noise_m")
      l.process_noise = val.get<double>();
    else if (key == "training_episodes")
      l.training_episodes = val.get<int>();
    else if (key == "twin_seed")
      l.twin_seed = val.get<std::uint64_t>();
    else if (key == "physical_seed")
      l.physical_seed = val.get<std::uint64_t>();
    else
      throw std::invalid_argument("scenario.loop." + key + ": unknown field");
  }
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::invalid_argument("output path: cannot write " + path);
  out << text;
  if (!out) throw std::invalid_argument("output path: write failed for " + path);
}

std::string traj_json(const Trajectory& t) {
  std::string s = "[";
  for (int m = 0; m < t.num_evtols; ++m) {
    if (m) s += ",";
    s += "[";
    for (int n = 0; n <= t.num_slots; ++n) {
      if (n) s += ",";
      const Vector3d& p = t.at(m, n);
      s += "[" + fmt12(p(0)) + "," + fmt12(p(1)) + "," + fmt12(p(2)) + "]";
    }
    s += "]";
  }
  return s + "]";
}

std::string matrix_json(const MatrixXd& m) {
  std::string s = "[";
  for (int r = 0; r < m.rows(); ++r) {
    if (r) s += ",";
    s += "[";
    for (int c = 0; c < m.cols(); ++c) {
      if (c) s += ",";
      s += fmt12(m(r, c));
    }
    s += "]";
  }
  return s + "]";
}

std::string dvec_json(const std::vector<double>& v) {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ",";
    s += fmt12(v[i]);
  }
  return s + "]";
}

Trajectory parse_traj(const json& a) {
  if (a.empty()) return Trajectory{};
  const int fleet = static_cast<int>(a.size());
  const int slots = static_cast<int>(a[0].size()) - 1;
  Trajectory t = Trajectory::zeros(fleet, slots);
  for (int m = 0; m < fleet; ++m)
    for (int n = 0; n <= slots; ++n) t.at(m, n) = vec3(a[m][n], "report trajectory point");
  return t;
}

}  // namespace

void Scenario::validate() const {
  geometry.validate();
  channel.validate();
  corridor.validate();
  kinematics.validate();
  initial_gains.validate();
  dqn.validate();
  loop.validate();
  for (const Obstacle& ob : obstacles) ob.validate();
  const int fleet = static_cast<int>(corridor.entries.size());
  if (geometry.num_antennas != fleet)
    throw std::invalid_argument(
        "scenario.geometry.num_antennas: must match the corridor entry count");
  if (static_cast<int>(initial_gains.k_target.size()) != fleet)
    throw std::invalid_argument(
        "scenario.gains.k_target: size must match the corridor entry count");
  if (num_slots < 1) throw std::invalid_argument("scenario.num_slots: must be positive");
  if (num_slots < loop.planning_rounds)
    throw std::invalid_argument("scenario.num_slots: must cover the planning rounds");
  if (!(total_power > 0.0))
    throw std::invalid_argument("scenario.total_power_mw: must be positive");
}

Scenario default_scenario() {
  Scenario sc;
  sc.geometry.num_layers = 5;
  sc.geometry.atoms_per_layer = 4;
  sc.geometry.num_antennas = 3;

  // Slalom course: wide enough that untuned controllers drift far off the
  // centerline at the bends, with staggered on-axis launch points so a tuned
  // fleet can hold the line from the first slot.
  sc.corridor.centerline = {Vector3d(0, 0, 100), Vector3d(80, 30, 100),
                            Vector3d(160, -30, 100), Vector3d(240, 30, 100),
                            Vector3d(330, 0, 100)};
  sc.corridor.radius = 130.0;
  sc.corridor.entries = {Vector3d(0, 0, 92), Vector3d(24, 9, 100),
                         Vector3d(48, 18, 108)};
  sc.corridor.exits = {Vector3d(282, 16, 100), Vector3d(306, 8, 100),
                       Vector3d(330, 0, 100)};

  // ground station under the corridor exit: progress along the course is
  // rewarded with a shorter air-ground link
  sc.station.position = Vector3d(330, 0, 0);

  sc.obstacles = {{Vector3d(60, 20, 100), 10.0},
                  {Vector3d(120, 0, 100), 10.0},
                  {Vector3d(200, 0, 100), 10.0},
                  {Vector3d(260, 24, 100), 10.0},
                  {Vector3d(300, 10, 100), 10.0}};

  sc.initial_gains = CPFParams::uniform(3, 0.02, 60.0, 0.02);
  return sc;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("scenario file: cannot open " + path);
  const std::string text((std::istreambuf_iterator<char>(in)),
                         std::istreambuf_iterator<char>());
  Scenario sc = default_scenario();
  if (text.find_first_not_of(" \t\r\n") == std::string::npos) return sc;

  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw std::invalid_argument("scenario file: " + std::string(e.what()));
  }
  if (!j.is_object())
    throw std::invalid_argument("scenario file: top level must be an object");

  try {
    for (const auto& [key, val] : j.items()) {
      if (key == "seed")
        sc.seed = val.get<std::uint64_t>();
      else if (key == "num_slots")
        sc.num_slots = val.get<int>();
      else if (key == "total_power_mw")
        sc.total_power = val.get<double>();
      else if (key == "total_power_dbm")
        sc.total_power = db_to_linear(val.get<double>());
      else if (key == "comm_reward")
        sc.comm_reward = val.get<bool>();
      else if (key == "collision") {
        for (const auto& [ck, cv] : val.items()) {
          if (ck == "c1")
            sc.collision_c1 = cv.get<double>();
          else if (ck == "c2")
            sc.collision_c2 = cv.get<double>();
          else
            throw std::invalid_argument("scenario.collision." + ck + ": unknown field");
        }
      } else if (key == "geometry")
        read_geometry(val, sc.geometry);
      else if (key == "station") {
        for (const auto& [sk, sv] : val.items()) {
          if (sk == "position_m")
            sc.station.position = vec3(sv, "scenario.station.position_m");
          else
            throw std::invalid_argument("scenario.station." + sk + ": unknown field");
        }
      } else if (key == "channel")
        read_channel(val, sc.channel);
      else if (key == "corridor")
        read_corridor(val, sc.corridor);
      else if (key == "obstacles") {
        sc.obstacles.clear();
        for (const auto& o : val) {
          Obstacle ob;
          for (const auto& [ok, ov] : o.items()) {
            if (ok == "center_m")
              ob.center = vec3(ov, "scenario.obstacles.center_m");
            else if (ok == "radius_m")
              ob.radius = ov.get<double>();
            else
              throw std::invalid_argument("scenario.obstacles." + ok + ": unknown field");
          }
          sc.obstacles.push_back(ob);
        }
      } else if (key == "kinematics") {
        for (const auto& [kk, kv] : val.items()) {
          if (kk == "slot_duration_s")
            sc.kinematics.slot_duration = kv.get<double>();
          else if (kk == "max_speed_mps")
            sc.kinematics.max_speed = kv.get<double>();
          else
            throw std::invalid_argument("scenario.kinematics." + kk + ": unknown field");
        }
      } else if (key == "gains")
        read_gains(val, sc.initial_gains);
      else if (key == "reward") {
        for (const auto& [rk, rv] : val.items()) {
          if (rk == "alpha1")
            sc.reward.alpha1 = rv.get<double>();
          else if (rk == "alpha2")
            sc.reward.alpha2 = rv.get<double>();
          else if (rk == "beta")
            sc.reward.beta = rv.get<double>();
          else
            throw std::invalid_argument("scenario.reward." + rk + ": unknown field");
        }
      } else if (key == "dqn")
        read_dqn(val, sc.dqn);
      else if (key == "loop")
        read_loop(val, sc.loop);
      else
        throw std::invalid_argument("scenario." + key + ": unknown field");
    }
  } catch (const json::exception& e) {
    throw std::invalid_argument("scenario file: " + std::string(e.what()));
  }
  sc.validate();
  return sc;
}

void save_scenario(const Scenario& sc, const std::string& path) {
  json j;
  j["seed"] = sc.seed;
  j["num_slots"] = sc.num_slots;
  j["total_power_mw"] = sc.total_power;
  j["comm_reward"] = sc.comm_reward;
  j["collision"] = {{"c1", sc.collision_c1}, {"c2", sc.collision_c2}};
  j["geometry"] = {{"num_layers", sc.geometry.num_layers},
                   {"atoms_per_layer", sc.geometry.atoms_per_layer},
                   {"wavelength_m", sc.geometry.wavelength},
                   {"thickness_m", sc.geometry.thickness},
                   {"atom_size_x_m", sc.geometry.atom_size_x},
                   {"atom_size_y_m", sc.geometry.atom_size_y},
                   {"num_antennas", sc.geometry.num_antennas}};
  j["station"] = {{"position_m", vec3_json(sc.station.position)}};
  j["channel"] = {{"ref_path_loss", sc.channel.ref_path_loss},
                  {"path_loss_exponent", sc.channel.path_loss_exponent},
                  {"rician_factor", sc.channel.rician_factor},
                  {"noise_power_mw", sc.channel.noise_power}};
  json centerline = json::array(), entries = json::array(), exits = json::array();
  for (const auto& p : sc.corridor.centerline) centerline.push_back(vec3_json(p));
  for (const auto& p : sc.corridor.entries) entries.push_back(vec3_json(p));
  for (const auto& p : sc.corridor.exits) exits.push_back(vec3_json(p));
  j["corridor"] = {{"centerline_m", centerline},
                   {"radius_m", sc.corridor.radius},
                   {"entries_m", entries},
                   {"exits_m", exits}};
  json obstacles = json::array();
  for (const auto& ob : sc.obstacles)
    obstacles.push_back({{"center_m", vec3_json(ob.center)}, {"radius_m", ob.radius}});
  j["obstacles"] = obstacles;
  j["kinematics"] = {{"slot_duration_s", sc.kinematics.slot_duration},
                     {"max_speed_mps", sc.kinematics.max_speed}};
  j["gains"] = {{"k_target", sc.initial_gains.k_target},
                {"k_separation", sc.initial_gains.k_separation},
                {"k_communication", sc.initial_gains.k_communication},
                {"d_separation_m", sc.initial_gains.d_separation},
                {"d_communication_m", sc.initial_gains.d_communication},
                {"d_maximum_m", sc.initial_gains.d_maximum}};
  j["reward"] = {{"alpha1", sc.reward.alpha1},
                 {"alpha2", sc.reward.alpha2},
                 {"beta", sc.reward.beta}};
  j["dqn"] = {{"learning_rate", sc.dqn.learning_rate},
              {"discount", sc.dqn.discount},
              {"epsilon_start", sc.dqn.epsilon_start},
              {"epsilon_end", sc.dqn.epsilon_end},
              {"epsilon_decay_fraction", sc.dqn.epsilon_decay_fraction},
              {"batch_size", sc.dqn.batch_size},
              {"target_sync_period", sc.dqn.target_sync_period},
              {"episodes", sc.dqn.episodes},
              {"steps_per_episode", sc.dqn.steps_per_episode},
              {"action_delta", sc.dqn.action_delta},
              {"buffer_capacity", sc.dqn.buffer_capacity},
              {"input_scale", sc.dqn.input_scale},
              {"gradient_clip", sc.dqn.gradient_clip},
              {"seed", sc.dqn.seed}};
  j["loop"] = {{"planning_rounds", sc.loop.planning_rounds},
               {"tolerance", sc.loop.tolerance},
               {"training_rounds", sc.loop.training_rounds},
               {"sync_count", sc.loop.sync_count},
               {"process_noise_m", sc.loop.process_noise},
               {"training_episodes", sc.loop.training_episodes},
               {"twin_seed", sc.loop.twin_seed},
               {"physical_seed", sc.loop.physical_seed}};
  write_file(path, j.dump(2) + "\n");
}

void export_report(const RunReport& rep, const std::string& out_dir,
                   const std::string& format) {
  if (format != "csv" && format != "json")
    throw std::invalid_argument("format: must be csv or json");
  std::filesystem::create_directories(out_dir);
  const auto path = [&](const char* name) { return out_dir + "/" + name; };

  if (format == "csv") {
    std::string rates = "slot,evtol,rate_nats\n";
    for (int n = 0; n < rep.rates.rows(); ++n)
      for (int m = 0; m < rep.rates.cols(); ++m)
        rates += std::to_string(n + 1) + "," + std::to_string(m) + "," +
                 fmt12(rep.rates(n, m)) + "\n";
    write_file(path("rates.csv"), rates);

    std::string traj = "slot,evtol,world,x_m,y_m,z_m\n";
    const auto append_world = [&](const Trajectory& t, const char* world) {
      for (int n = 0; n <= t.num_slots; ++n)
        for (int m = 0; m < t.num_evtols; ++m) {
          const Vector3d& p = t.at(m, n);
          traj += std::to_string(n) + "," + std::to_string(m) + "," + world + "," +
                  fmt12(p(0)) + "," + fmt12(p(1)) + "," + fmt12(p(2)) + "\n";
        }
    };
    append_world(rep.twin, "twin");
    append_world(rep.physical, "phys");
    write_file(path("traj.csv"), traj);

    std::string metrics = "metric,value\n";
    metrics += "total_rate_nats," + fmt12(rep.total_rate()) + "\n";
    metrics += "mean_deviation_m," + fmt12(rep.mean_deviation) + "\n";
    metrics += "min_separation_m," + fmt12(rep.min_separation) + "\n";
    metrics += "syncs," + std::to_string(rep.divergence.size()) + "\n";
    metrics += "stalled," + std::to_string(rep.stalled ? 1 : 0) + "\n";
    for (std::size_t m = 0; m < rep.final_gains.k_target.size(); ++m) {
      metrics += "final_k_target_" + std::to_string(m) + "," +
                 fmt12(rep.final_gains.k_target[m]) + "\n";
      metrics += "final_k_separation_" + std::to_string(m) + "," +
                 fmt12(rep.final_gains.k_separation[m]) + "\n";
      metrics += "final_k_communication_" + std::to_string(m) + "," +
                 fmt12(rep.final_gains.k_communication[m]) + "\n";
    }
    write_file(path("metrics.csv"), metrics);

    std::string traces = "series,index,value\n";
    const auto append_series = [&](const char* name, const std::vector<double>& v) {
      for (std::size_t i = 0; i < v.size(); ++i)
        traces += std::string(name) + "," + std::to_string(i) + "," + fmt12(v[i]) + "\n";
    };
    append_series("bcd_objective", rep.bcd_trace);
    append_series("episode_reward", rep.reward_trace);
    append_series("episode_deviation", rep.deviation_trace);
    for (std::size_t s = 0; s < rep.divergence.size(); ++s)
      for (std::size_t m = 0; m < rep.divergence[s].size(); ++m)
        traces += "divergence_craft" + std::to_string(m) + "," + std::to_string(s) +
                  "," + fmt12(rep.divergence[s][m]) + "\n";
    write_file(path("traces.csv"), traces);
    return;
  }

  std::string out = "{\n";
  out += "  \"rates\": " + matrix_json(rep.rates) + ",\n";
  out += "  \"twin\": " + traj_json(rep.twin) + ",\n";
  out += "  \"physical\": " + traj_json(rep.physical) + ",\n";
  out += "  \"mean_deviation_m\": " + fmt12(rep.mean_deviation) + ",\n";
  out += "  \"min_separation_m\": " + fmt12(rep.min_separation) + ",\n";
  out += "  \"divergence_m\": [";
  for (std::size_t s = 0; s < rep.divergence.size(); ++s) {
    if (s) out += ",";
    out += dvec_json(rep.divergence[s]);
  }
  out += "],\n";
  out += "  \"final_gains\": {\"k_target\": " + dvec_json(rep.final_gains.k_target) +
         ", \"k_separation\": " + dvec_json(rep.final_gains.k_separation) +
         ", \"k_communication\": " + dvec_json(rep.final_gains.k_communication) +
         ", \"d_separation_m\": " + fmt12(rep.final_gains.d_separation) +
         ", \"d_communication_m\": " + fmt12(rep.final_gains.d_communication) +
         ", \"d_maximum_m\": " + fmt12(rep.final_gains.d_maximum) + "},\n";
  out += "  \"bcd_trace\": " + dvec_json(rep.bcd_trace) + ",\n";
  out += "  \"reward_trace\": " + dvec_json(rep.reward_trace) + ",\n";
  out += "  \"deviation_trace\": " + dvec_json(rep.deviation_trace) + ",\n";
  out += std::string("  \"stalled\": ") + (rep.stalled ? "true" : "false") + "\n";
  out += "}\n";
  write_file(path("report.json"), out);
}

RunReport import_report_json(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("report file: cannot open " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw std::invalid_argument("report file: " + std::string(e.what()));
  }
  RunReport r;
  const auto& rates = j.at("rates");
  if (!rates.empty()) {
    r.rates = MatrixXd(rates.size(), rates[0].size());
    for (int n = 0; n < r.rates.rows(); ++n)
      for (int m = 0; m < r.rates.cols(); ++m) r.rates(n, m) = rates[n][m].get<double>();
  }
  r.twin = parse_traj(j.at("twin"));
  r.physical = parse_traj(j.at("physical"));
  r.mean_deviation = j.at("mean_deviation_m").get<double>();
  r.min_separation = j.at("min_separation_m").get<double>();
  for (const auto& row : j.at("divergence_m")) r.divergence.push_back(dvec(row));
  const auto& fg = j.at("final_gains");
  r.final_gains.k_target = dvec(fg.at("k_target"));
  r.final_gains.k_separation = dvec(fg.at("k_separation"));
  r.final_gains.k_communication = dvec(fg.at("k_communication"));
  r.final_gains.d_separation = fg.at("d_separation_m").get<double>();
  r.final_gains.d_communication = fg.at("d_communication_m").get<double>();
  r.final_gains.d_maximum = fg.at("d_maximum_m").get<double>();
  r.bcd_trace = dvec(j.at("bcd_trace"));
  r.reward_trace = dvec(j.at("reward_trace"));
  r.deviation_trace = dvec(j.at("deviation_trace"));
  r.stalled = j.at("stalled").get<bool>();
  return r;
}

}  // namespace aam
